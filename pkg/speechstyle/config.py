from pydantic_settings import BaseSettings
from typing import Optional


class Settings(BaseSettings):
    # Audio
    sample_rate: int = 16000
    snippet_seconds: int = 30
    min_tail_seconds: float = 5.0
    training_chunks: int = 25

    # Framing for low-level descriptors
    frame_window_ms: float = 25.0
    frame_hop_ms: float = 10.0
    f0_min_hz: float = 50.0
    f0_max_hz: float = 500.0

    # Voice activity detection
    vad_mad_k: float = 3.0
    vad_hangover_ms: float = 200.0
    vad_min_margin_db: float = 6.0
    vad_silence_db: float = -60.0

    # Precomputed embedding inputs
    classscore_hop_seconds: float = 0.48
    embedding_hop_seconds: float = 0.02
    embedding_frames: int = 1500
    topk: int = 4

    # Reports
    histogram_bin_width: float = 0.05

    # Logging
    log_config: str = "logging.ini"
    log_level: Optional[str] = None

    class Config:
        env_file = ".env"
        env_prefix = "SPEECHSTYLE_"

    @property
    def window_samples(self) -> int:
        return int(round(self.sample_rate * self.frame_window_ms / 1000))

    @property
    def hop_samples(self) -> int:
        return int(round(self.sample_rate * self.frame_hop_ms / 1000))

    @property
    def frame_rate(self) -> float:
        return self.sample_rate / self.hop_samples


settings = Settings()
