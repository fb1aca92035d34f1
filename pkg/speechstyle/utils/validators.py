# Data validation utilities
from typing import Sequence

import numpy as np


def is_finite(values) -> bool:
    """True when every value is a finite number"""
    arr = np.asarray(values)
    return arr.size == 0 or bool(np.all(np.isfinite(arr)))


def is_probability(value: float) -> bool:
    return 0.0 <= value <= 1.0


def is_binary_labels(labels: Sequence[int]) -> bool:
    return all(label in (0, 1) for label in labels)


def has_both_classes(labels: Sequence[int]) -> bool:
    values = set(int(label) for label in labels)
    return values == {0, 1}


def normalize_language(language: str) -> str:
    """Lowercase and trim a language name"""
    return language.strip().lower()


def language_aliases(language: str) -> list:
    """Split compound names such as 'filipino/tagalog' into each spelling"""
    normalized = normalize_language(language)
    parts = [part.strip() for part in normalized.split("/") if part.strip()]
    return parts or [normalized]
