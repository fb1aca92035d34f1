# Error types shared by services and commands
from typing import Dict, List, Optional


class SpeechStyleError(Exception):
    """Base error; carries the process exit code used by the command line"""

    exit_code: int = 1

    def __init__(self, detail: str, exit_code: Optional[int] = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code


class ConfigError(SpeechStyleError):
    exit_code = 2


class ManifestError(SpeechStyleError):
    """Manifest rejected as a whole, or rows that could not be resolved"""

    exit_code = 2

    def __init__(self, detail: str, row_errors: Optional[List[Dict]] = None):
        super().__init__(detail)
        self.row_errors = row_errors or []


class AudioDecodeError(SpeechStyleError):
    pass


class FeatureFileError(SpeechStyleError):
    pass


class BadMagicError(FeatureFileError):
    pass


class TruncatedPayloadError(FeatureFileError):
    pass


class DimensionOverflowError(FeatureFileError):
    pass


class FeatureDimensionError(SpeechStyleError):
    """A feature component has the wrong length"""

    def __init__(self, component: str, expected: int, actual: int):
        super().__init__(f"{component}: expected {expected} values, got {actual}")
        self.component = component


class SchemaMismatchError(SpeechStyleError):
    def __init__(self, expected: str, actual: str):
        super().__init__(f"schema mismatch: checkpoint expects '{expected}', input is '{actual}'")
        self.expected = expected
        self.actual = actual


class TrainingError(SpeechStyleError):
    pass


class MetricError(SpeechStyleError):
    pass
