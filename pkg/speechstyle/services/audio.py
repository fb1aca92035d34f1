# Audio decoding, resampling and 30 second snippet segmentation
import logging
from dataclasses import dataclass
from math import gcd
from pathlib import Path
from typing import List

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

from ..config import settings
from ..exceptions import AudioDecodeError

logger = logging.getLogger(__name__)

# resample_poly designs a Kaiser-windowed sinc FIR (beta 5.0) with
# 10 * max(up, down) taps on each side of the centre.
RESAMPLE_WINDOW = ("kaiser", 5.0)


@dataclass
class AudioBuffer:
    samples: np.ndarray  # float32, mono, in [-1, 1]
    sample_rate: int

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise AudioDecodeError(f"invalid sample rate {self.sample_rate}")
        if not np.all(np.isfinite(self.samples)):
            raise AudioDecodeError("audio contains non-finite samples")

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass
class Snippet:
    episode_id: str
    index: int
    samples: np.ndarray  # exactly snippet_seconds * sample_rate values
    padded_tail: int = 0

    @property
    def valid_samples(self) -> int:
        return len(self.samples) - self.padded_tail


def _to_float(data: np.ndarray) -> np.ndarray:
    if data.dtype == np.uint8:
        return (data.astype(np.float32) - 128.0) / 128.0
    if data.dtype == np.int16:
        return data.astype(np.float32) / 32768.0
    if data.dtype == np.int32:
        # 24-bit files are returned left-aligned in int32
        return (data.astype(np.float64) / 2147483648.0).astype(np.float32)
    if data.dtype in (np.float32, np.float64):
        return data.astype(np.float32, copy=False)
    raise AudioDecodeError(f"unsupported sample type {data.dtype}")


def resample(samples: np.ndarray, source_rate: int, target_rate: int) -> np.ndarray:
    """Band-limited polyphase resampling"""
    if source_rate == target_rate:
        return samples
    divisor = gcd(source_rate, target_rate)
    up, down = target_rate // divisor, source_rate // divisor
    out = resample_poly(samples.astype(np.float64), up, down, window=RESAMPLE_WINDOW)
    return out.astype(np.float32)


def decode_resample(path: str, sample_rate: int = None) -> AudioBuffer:
    """Decode a PCM WAV file to a mono buffer at the configured rate"""
    target = sample_rate or settings.sample_rate
    try:
        source_rate, data = wavfile.read(path)
    except (OSError, ValueError, EOFError) as e:
        raise AudioDecodeError(f"cannot decode {path}: {e}")

    if data.size == 0:
        raise AudioDecodeError(f"{path}: zero-length audio")

    samples = _to_float(np.asarray(data))
    if samples.ndim == 2:
        samples = samples.mean(axis=1, dtype=np.float64).astype(np.float32)
    if not np.all(np.isfinite(samples)):
        raise AudioDecodeError(f"{path}: non-finite samples")

    samples = resample(samples, int(source_rate), target)
    samples = np.clip(samples, -1.0, 1.0)
    return AudioBuffer(samples=samples, sample_rate=target)


def chunk_episode(buffer: AudioBuffer, episode_id: str = "",
                  snippet_seconds: int = None, min_tail_seconds: float = None) -> List[Snippet]:
    """Cut a buffer into fixed 30 s snippets, padding a long enough tail"""
    seconds = snippet_seconds or settings.snippet_seconds
    min_tail = settings.min_tail_seconds if min_tail_seconds is None else min_tail_seconds
    length = seconds * buffer.sample_rate
    min_tail_samples = int(round(min_tail * buffer.sample_rate))

    total = len(buffer.samples)
    if total < min_tail_samples:
        logger.warning("%s: %.2f s of audio is shorter than %.1f s, no snippets",
                       episode_id or "buffer", buffer.duration, min_tail)
        return []

    snippets = []
    n_full, remainder = divmod(total, length)
    for index in range(n_full):
        chunk = buffer.samples[index * length:(index + 1) * length]
        snippets.append(Snippet(episode_id, index, chunk.astype(np.float32, copy=True), 0))

    if remainder >= min_tail_samples:
        tail = np.zeros(length, dtype=np.float32)
        tail[:remainder] = buffer.samples[n_full * length:]
        snippets.append(Snippet(episode_id, n_full, tail, length - remainder))
    return snippets


def training_window(snippets: List[Snippet], n: int = None) -> List[Snippet]:
    """The n sequential snippets from the middle of an episode"""
    n = n or settings.training_chunks
    if len(snippets) <= n:
        return list(snippets)
    start = (len(snippets) - n) // 2
    return list(snippets[start:start + n])


# === SNIPPET CACHE ===
def snippet_cache_path(cache_dir: str, episode_id: str, index: int) -> Path:
    return Path(cache_dir) / f"{episode_id}.{index}.pcm"


def write_snippet_cache(snippet: Snippet, cache_dir: str) -> Path:
    """Store raw little-endian float32 frames"""
    path = snippet_cache_path(cache_dir, snippet.episode_id, snippet.index)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(snippet.samples.astype("<f4").tobytes())
    return path


def read_snippet_cache(cache_dir: str, episode_id: str, index: int, padded_tail: int = 0) -> Snippet:
    path = snippet_cache_path(cache_dir, episode_id, index)
    samples = np.frombuffer(path.read_bytes(), dtype="<f4").astype(np.float32)
    return Snippet(episode_id, index, samples, padded_tail)
