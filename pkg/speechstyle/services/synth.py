# Synthetic labeled corpus: tonal "speech" with class-specific pause and pitch behaviour
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed
from pydantic import ValidationError
from scipy.io import wavfile

from ..config import settings
from ..exceptions import ConfigError, SpeechStyleError
from ..schemas import EpisodeRecord, Label, SynthConfig, SynthProfile
from ..utils.helpers import ensure_dir, read_key_value_file, split_list, write_json
from .audio import AudioBuffer
from .corpus import write_manifest

logger = logging.getLogger(__name__)

NOISE_FLOOR = 1e-4
LEVEL = 0.3
MIN_PAUSE_SECONDS = 0.3
MIN_SPAN_SECONDS = 0.5
FRAME_SECONDS = 0.01
N_HARMONICS = 5

FORMATS: Dict[Label, List[str]] = {
    Label.scripted: ["Scripted narrative", "Scripted non-fiction"],
    Label.spontaneous: ["Discussion", "Blabbercast"],
}


@dataclass
class SynthEpisode:
    buffer: AudioBuffer
    silence_fraction: float
    spans: List[Tuple[float, float]]  # voiced (start, end) seconds


def _layout(profile: SynthProfile, rng: np.random.Generator, duration: float) -> List[Tuple[float, float]]:
    """Voiced span lengths and the pause after each, summing exactly to duration"""
    span_mean = float(np.mean(profile.span_seconds))
    natural = profile.pause_mean_seconds / (profile.pause_mean_seconds + span_mean)
    low, high = profile.silence_fraction
    margin = 0.1 * (high - low)
    target = float(np.clip(natural * np.exp(rng.normal(0.0, 0.15)), low + margin, high - margin))

    speech_total = duration * (1.0 - target)
    spans: List[float] = []
    while sum(spans) < speech_total:
        spans.append(float(rng.uniform(*profile.span_seconds)))
    spans[-1] -= sum(spans) - speech_total
    if spans[-1] < MIN_SPAN_SECONDS and len(spans) > 1:
        tail = spans.pop()
        spans[-1] += tail

    # lognormal pauses with the profile mean, rescaled to the target total
    mu = np.log(profile.pause_mean_seconds) - profile.pause_sigma ** 2 / 2.0
    pauses = np.maximum(rng.lognormal(mu, profile.pause_sigma, size=len(spans)), MIN_PAUSE_SECONDS)
    pauses *= (duration - speech_total) / pauses.sum()
    return list(zip(spans, pauses.tolist()))


def _voiced_span(profile: SynthProfile, rng: np.random.Generator, seconds: float,
                 f0_start: float, sample_rate: int) -> Tuple[np.ndarray, float]:
    n = int(round(seconds * sample_rate))
    steps = max(2, int(np.ceil(seconds / FRAME_SECONDS)) + 1)

    # mean-reverting random walk in log-f0
    log_f0 = np.empty(steps)
    log_f0[0] = np.log(f0_start)
    centre = np.log(f0_start)
    for i in range(1, steps):
        log_f0[i] = log_f0[i - 1] + 0.02 * (centre - log_f0[i - 1]) + profile.f0_walk * rng.normal()
    f0 = np.clip(np.exp(log_f0), 70.0, 400.0)
    f0 = np.interp(np.arange(n) / sample_rate, np.arange(steps) * FRAME_SECONDS, f0)

    phase = 2.0 * np.pi * np.cumsum(f0) / sample_rate
    tone = sum(np.sin(k * phase) / k for k in range(1, N_HARMONICS + 1))

    envelope = np.empty(n)
    position = 0
    while position < n:
        length = profile.syllable_seconds * (1.0 + profile.syllable_jitter * rng.normal())
        length = int(np.clip(length, 0.08, 0.6) * sample_rate)
        peak = float(np.clip(1.0 + profile.syllable_jitter * rng.normal(), 0.3, 1.5))
        t = np.arange(min(length, n - position)) / length
        envelope[position:position + t.size] = peak * (0.25 + 0.75 * 0.5 * (1.0 - np.cos(2.0 * np.pi * t)))
        position += t.size

    return LEVEL * tone * envelope / 2.3, float(f0[-1])


def gen_episode(profile: SynthProfile, seed: int, duration: float,
                sample_rate: Optional[int] = None) -> SynthEpisode:
    """Deterministic synthetic episode for one class profile"""
    if duration < 60:
        raise SpeechStyleError(f"episode duration must be at least 60 s, got {duration}")
    rate = sample_rate or settings.sample_rate
    rng = np.random.default_rng(seed)

    layout = _layout(profile, rng, duration)
    total = int(round(duration * rate))
    samples = np.zeros(total, dtype=np.float64)
    f0 = float(rng.uniform(110.0, 220.0))

    spans = []
    cursor = 0.0
    for span, pause in layout:
        start = int(round(cursor * rate))
        voiced, f0 = _voiced_span(profile, rng, span, f0, rate)
        stop = min(start + voiced.size, total)
        samples[start:stop] = voiced[:stop - start]
        spans.append((start / rate, stop / rate))
        cursor += span + pause

    voiced_samples = sum(int(round(b * rate)) - int(round(a * rate)) for a, b in spans)
    samples += NOISE_FLOOR * rng.normal(size=total)
    samples = np.clip(samples, -1.0, 1.0).astype(np.float32)
    return SynthEpisode(buffer=AudioBuffer(samples=samples, sample_rate=rate),
                        silence_fraction=1.0 - voiced_samples / total, spans=spans)


# === CORPUS ===
def blend_profiles(first: SynthProfile, second: SynthProfile, label: Label, weight: float = 0.5) -> SynthProfile:
    """Profile halfway (by weight) between two classes; both labels share it"""
    def mix(a, b):
        if isinstance(a, tuple):
            return tuple(mix(x, y) for x, y in zip(a, b))
        return (1.0 - weight) * a + weight * b

    numeric = {name: mix(getattr(first, name), getattr(second, name))
               for name in SynthProfile.model_fields if name != "label"}
    return SynthProfile(label=label, **numeric)


def is_confusable(index: int, fraction: float) -> bool:
    """Every 1/fraction-th episode of a class, spread evenly over its strata"""
    return int((index + 1) * fraction) > int(index * fraction)


def load_synth_config(path: Optional[str], **overrides) -> SynthConfig:
    """`key = value` synth settings; CLI overrides win"""
    values: Dict = {}
    if path is not None:
        for key, value in read_key_value_file(path):
            key = key.strip().lower().replace("-", "_")
            if key in ("languages", "categories"):
                values[key] = split_list(value)
            elif key == "skew":
                values[key] = tuple(int(v) for v in value.replace(":", ",").split(","))
            else:
                values[key] = value
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return SynthConfig(**values)
    except (ValidationError, ValueError) as e:
        raise ConfigError(f"invalid synth config: {e}")


def _write_wav(path: Path, buffer: AudioBuffer) -> None:
    pcm = np.round(buffer.samples * 32767.0).astype("<i2")
    wavfile.write(str(path), buffer.sample_rate, pcm)


def _gen_one(profile: SynthProfile, seed: int, duration: float, path: Path) -> float:
    episode = gen_episode(profile, seed, duration)
    _write_wav(path, episode.buffer)
    return episode.silence_fraction


def gen_corpus(config: SynthConfig, out_dir: str, jobs: int = 1) -> List[EpisodeRecord]:
    """Write WAV files plus manifest.csv; identical output for identical config"""
    try:
        directory = ensure_dir(out_dir)
        audio_dir = ensure_dir(str(directory / "audio"))
    except OSError as e:
        raise ConfigError(f"cannot write synthetic corpus to {out_dir}: {e}")

    n_scripted, n_spontaneous = config.class_counts()
    labels = [Label.scripted] * n_scripted + [Label.spontaneous] * n_spontaneous
    seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(config.seed).spawn(len(labels))]

    records, jobs_args, confusable = [], [], []
    within = {Label.scripted: 0, Label.spontaneous: 0}
    for i, (label, seed) in enumerate(zip(labels, seeds)):
        j = within[label]
        within[label] += 1
        episode_id = f"synth-{i:04d}"
        path = audio_dir / f"{episode_id}.wav"
        records.append(EpisodeRecord(
            episode_id=episode_id,
            audio_path=f"audio/{episode_id}.wav",
            label=label,
            language=config.languages[j % len(config.languages)],
            category=config.categories[(j // len(config.languages)) % len(config.categories)],
            format=FORMATS[label][j % len(FORMATS[label])],
        ))
        profile = config.scripted if label is Label.scripted else config.spontaneous
        if is_confusable(j, config.confusable_fraction):
            profile = blend_profiles(config.scripted, config.spontaneous, label)
            confusable.append(episode_id)
        jobs_args.append((profile, seed, config.episode_seconds, path))

    fractions = Parallel(n_jobs=jobs)(delayed(_gen_one)(*args) for args in jobs_args)
    write_manifest(records, str(directory / "manifest.csv"))
    write_json({"config": config.model_dump(mode="json"),
                "silence_fraction": {r.episode_id: round(f, 6) for r, f in zip(records, fractions)},
                "confusable": confusable},
               str(directory / "synth.json"))
    logger.info("wrote %d synthetic episodes (%d scripted, %d spontaneous, %d confusable) to %s",
                len(records), n_scripted, n_spontaneous, len(confusable), directory)
    return records
