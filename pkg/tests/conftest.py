import numpy as np
import pytest
from scipy.io import wavfile

from speechstyle.schemas import EpisodeRecord, Label, SynthConfig
from speechstyle.services import synth
from speechstyle.services.audio import Snippet

SR = 16000


def tone(freq: float, seconds: float, amplitude: float = 0.5, sr: int = SR) -> np.ndarray:
    t = np.arange(int(round(seconds * sr))) / sr
    return (amplitude * np.sin(2 * np.pi * freq * t)).astype(np.float32)


def silence(seconds: float, sr: int = SR) -> np.ndarray:
    return np.zeros(int(round(seconds * sr)), dtype=np.float32)


def as_snippet(samples: np.ndarray, episode_id: str = "ep") -> Snippet:
    return Snippet(episode_id=episode_id, index=0, samples=np.asarray(samples, dtype=np.float32))


def write_wav(path, samples: np.ndarray, sr: int = SR) -> str:
    wavfile.write(str(path), sr, np.asarray(samples, dtype=np.float32))
    return str(path)


def record(episode_id: str, label: str = "scripted", language: str = "english",
           category: str = "society", format: str = "") -> EpisodeRecord:
    return EpisodeRecord(episode_id=episode_id, label=Label(label), language=language,
                         category=category, format=format)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """6 + 6 one-minute synthetic episodes"""
    out = tmp_path_factory.mktemp("corpus")
    config = SynthConfig(seed=7, episodes_per_class=6, episode_seconds=60)
    synth.gen_corpus(config, str(out))
    return out
