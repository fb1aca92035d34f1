from enum import Enum
from pydantic import BaseModel, Field, field_validator, model_validator
from typing import Dict, List, Literal, Optional, Set, Tuple


# === CORPUS SCHEMAS ===
class Label(str, Enum):
    scripted = "scripted"
    spontaneous = "spontaneous"

    @property
    def positive(self) -> int:
        """1 for the positive (scripted) class"""
        return 1 if self is Label.scripted else 0


class MappedLabel(str, Enum):
    scripted = "scripted"
    spontaneous = "spontaneous"
    ambiguous = "ambiguous"


class EpisodeRecord(BaseModel):
    episode_id: str
    audio_path: Optional[str] = None
    feature_path: Optional[str] = None
    label: Label
    language: str
    category: str = ""
    format: str = ""

    class Config:
        frozen = True

    @field_validator("episode_id")
    @classmethod
    def episode_id_not_blank(cls, value: str) -> str:
        if not value.strip():
            raise ValueError("episode_id is empty")
        return value.strip()

    @property
    def stratum(self) -> Tuple[str, str, str]:
        return (self.category, self.format, self.language)


class LabelMapping(BaseModel):
    # keys are normalized format strings (stripped, casefolded)
    entries: Dict[str, MappedLabel] = Field(default_factory=dict)

    def resolve(self, format_name: str) -> Optional[MappedLabel]:
        return self.entries.get(format_name.strip().casefold())


class LanguageGroup(BaseModel):
    rules: Dict[str, str] = Field(default_factory=dict)
    exclusions: Set[str] = Field(default_factory=set)


class FoldAssignment(BaseModel):
    k: int = 5
    seed: int = 0
    assignment: Dict[str, int] = Field(default_factory=dict)

    @model_validator(mode="after")
    def folds_in_range(self) -> "FoldAssignment":
        for episode_id, fold in self.assignment.items():
            if not 0 <= fold < self.k:
                raise ValueError(f"{episode_id}: fold {fold} outside [0, {self.k})")
        return self

    def members(self, fold: int) -> List[str]:
        return sorted(e for e, f in self.assignment.items() if f == fold)

    def sizes(self) -> List[int]:
        counts = [0] * self.k
        for fold in self.assignment.values():
            counts[fold] += 1
        return counts


# === MODEL SCHEMAS ===
class HeadArchitecture(BaseModel):
    variant: Literal["vector-head", "matrix-head"]
    input_dim: int
    frames: Optional[int] = None  # fixed T for matrix-head inputs
    projection: int = 100
    hidden: int = 50
    dropout: float = 0.2

    @model_validator(mode="after")
    def shapes_consistent(self) -> "HeadArchitecture":
        if self.input_dim < 1:
            raise ValueError("input_dim must be positive")
        if self.variant == "matrix-head" and (self.frames is None or self.frames < 1):
            raise ValueError("matrix-head needs a positive frame count")
        return self


class TrainConfig(BaseModel):
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    adam_epsilon: float = 1e-7
    batch_size: int = 64
    max_epochs: int = 40
    dropout: float = 0.2
    seed: int = 0
    class_counts: Tuple[int, int] = (1, 1)  # (n_scripted, n_spontaneous)

    @model_validator(mode="after")
    def all_positive(self) -> "TrainConfig":
        for name in ("learning_rate", "beta1", "beta2", "adam_epsilon", "batch_size", "max_epochs"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        return self


class EpochLog(BaseModel):
    epoch: int
    train_loss: float
    val_loss: float
    val_accuracy: float
    val_auc: Optional[float] = None


class CheckpointHeader(BaseModel):
    format_version: int = 1
    tool_version: str
    schema_id: str
    arch: HeadArchitecture
    config: TrainConfig
    seed: int
    epoch: int
    val_loss: float
    parameters: List[Tuple[str, List[int]]]
    standardizer_dim: int = 0


# === EVALUATION SCHEMAS ===
class PredictionRecord(BaseModel):
    episode_id: str
    snippet_scores: List[float]
    episode_score: float
    fold: int
    label: Label
    language: str
    format: str = ""
    category: str = ""

    @model_validator(mode="after")
    def episode_score_within_snippets(self) -> "PredictionRecord":
        if self.snippet_scores:
            low, high = min(self.snippet_scores), max(self.snippet_scores)
            if not low - 1e-12 <= self.episode_score <= high + 1e-12:
                raise ValueError("episode score outside snippet score range")
        return self


class FoldMetrics(BaseModel):
    fold: int
    n_episodes: int
    auc: Optional[float] = None
    f1_scripted: float
    f1_spontaneous: float
    accuracy: float


class MetricSummary(BaseModel):
    mean: Optional[float] = None
    std: Optional[float] = None


class LanguageRow(BaseModel):
    group: str
    n_episodes: int
    fold_auc: List[Optional[float]]
    mean_auc: Optional[float] = None
    pooled_auc: Optional[float] = None


class HistogramBin(BaseModel):
    bin_start: float
    count_scripted: int
    count_spontaneous: int


class MetricsReport(BaseModel):
    tool_version: str
    schema_id: str = ""
    seed: int = 0
    aggregation: Literal["median", "mean"] = "median"
    folds: List[FoldMetrics]
    summary: Dict[str, MetricSummary]
    baseline: Dict[str, MetricSummary] = Field(default_factory=dict)
    per_language: List[LanguageRow] = Field(default_factory=list)
    histogram: List[HistogramBin] = Field(default_factory=list)
    format_histogram: Dict[str, List[HistogramBin]] = Field(default_factory=dict)
    language_distribution: Dict[str, Dict[str, int]] = Field(default_factory=dict)


# === SYNTH SCHEMAS ===
class SynthProfile(BaseModel):
    label: Label
    span_seconds: Tuple[float, float]
    pause_mean_seconds: float
    pause_sigma: float  # lognormal shape of pause durations
    silence_fraction: Tuple[float, float]
    f0_walk: float  # per-10ms log-f0 step size
    syllable_seconds: float
    syllable_jitter: float


SCRIPTED_PROFILE = SynthProfile(
    label=Label.scripted,
    span_seconds=(3.5, 6.0),
    pause_mean_seconds=0.45,
    pause_sigma=0.1,
    silence_fraction=(0.05, 0.15),
    f0_walk=0.002,
    syllable_seconds=0.25,
    syllable_jitter=0.02,
)

SPONTANEOUS_PROFILE = SynthProfile(
    label=Label.spontaneous,
    span_seconds=(1.0, 4.0),
    pause_mean_seconds=1.3,
    pause_sigma=0.6,
    silence_fraction=(0.25, 0.45),
    f0_walk=0.012,
    syllable_seconds=0.22,
    syllable_jitter=0.35,
)


class SynthConfig(BaseModel):
    seed: int = 0
    episodes_per_class: int = 40
    episode_seconds: float = 180.0
    languages: List[str] = Field(default_factory=lambda: ["lang-a", "lang-b"])
    categories: List[str] = Field(default_factory=lambda: ["society", "comedy"])
    skew: Optional[Tuple[int, int]] = None  # scripted:spontaneous ratio
    confusable_fraction: float = 0.0  # share of each class drawn from the blended profile
    scripted: SynthProfile = SCRIPTED_PROFILE
    spontaneous: SynthProfile = SPONTANEOUS_PROFILE

    @model_validator(mode="after")
    def valid_corpus(self) -> "SynthConfig":
        if self.episodes_per_class < 1:
            raise ValueError("episodes_per_class must be positive")
        if self.episode_seconds < 60:
            raise ValueError("episode_seconds must be at least 60")
        if not self.languages or not self.categories:
            raise ValueError("languages and categories must be non-empty")
        if self.skew is not None and min(self.skew) < 1:
            raise ValueError("skew ratio terms must be positive")
        if not 0.0 <= self.confusable_fraction <= 1.0:
            raise ValueError("confusable_fraction must lie in [0, 1]")
        return self

    def class_counts(self) -> Tuple[int, int]:
        total = 2 * self.episodes_per_class
        if self.skew is None:
            return self.episodes_per_class, self.episodes_per_class
        n_scripted = int(round(total * self.skew[0] / (self.skew[0] + self.skew[1])))
        return n_scripted, total - n_scripted


# === RUN SCHEMAS ===
FeatureKind = Literal[
    "handcrafted", "egemaps", "embedding-matrix", "classscore-summary", "classscore-topk"
]


class RunConfig(BaseModel):
    subcommand: str
    manifest: Optional[str] = None
    features: Optional[str] = None
    kind: FeatureKind = "handcrafted"
    out: str = "."
    seed: int = 0
    folds: int = 5
    aggregation: Literal["median", "mean"] = "median"
    label_map: Optional[str] = None
    lang_groups: Optional[str] = None
    inner_val: bool = False
    jobs: int = 1
    force: bool = False

    @model_validator(mode="after")
    def sane_counts(self) -> "RunConfig":
        if self.folds < 2:
            raise ValueError("folds must be at least 2")
        if self.jobs == 0:
            raise ValueError("jobs must be non-zero")
        return self
