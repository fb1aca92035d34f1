# Handcrafted acoustic-prosodic features: 88 functionals + speaking rate + segment durations
#
# The acoustic block follows the eGeMAPS layout (pitch, loudness, MFCC, spectral
# balance, voice quality and temporal parameters) but is computed in-repo and is
# not numerically compatible with openSMILE. Voice activity and overlap come from
# an energy/periodicity heuristic instead of a neural segmentation model.
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.fft import dct, irfft, rfft
from scipy.ndimage import uniform_filter1d
from scipy.signal import find_peaks, get_window

from .. import __version__
from ..config import settings
from ..exceptions import FeatureDimensionError, SpeechStyleError
from ..utils.helpers import runs
from .audio import Snippet

logger = logging.getLogger(__name__)

ACOUSTIC_DIM = 88
RATE_DIM = 2
DURATION_DIM = 25
HANDCRAFTED_DIM = ACOUSTIC_DIM + RATE_DIM + DURATION_DIM

HANDCRAFTED_SCHEMA = f"handcrafted@{__version__}"
EGEMAPS_SCHEMA = f"egemaps@{__version__}"

ENERGY_FLOOR_DB = -100.0
POWER_FLOOR = 1e-10
SILENCE_POWER = 1e-10
VOICING_THRESHOLD = 0.5
YIN_THRESHOLD = 0.1
PITCH_FRAME_SECONDS = 0.06
N_FFT = 512
N_MELS = 26
N_MFCC = 13
HNR_LIMIT_DB = 30.0

SEGMENT_KINDS = ("speech", "nonspeech", "overlap")
OVERLAP_SECONDARY = 0.4
OVERLAP_FLATNESS = 0.5
OVERLAP_MIN_SECONDS = 0.1
MIN_SPEECH_SECONDS = 0.05
QUICK_RESUME_SECONDS = 0.5
NUCLEUS_PROMINENCE_DB = 3.0
NUCLEUS_MIN_GAP_SECONDS = 0.1

FULL_FUNCTIONALS = ["mean", "std", "p20", "p50", "p80", "range20_80", "rise_slope_mean", "fall_slope_mean"]
VOICED_LLDS = ["centroid", "flux", "slope", "hnr", "alpha_ratio", "hammarberg", "jitter", "shimmer"]
UNVOICED_LLDS = ["centroid", "flux", "slope", "alpha_ratio", "hammarberg"]
TEMPORAL = [
    "voiced_segment_mean", "voiced_segment_std", "unvoiced_segment_mean", "unvoiced_segment_std",
    "voiced_segments_per_sec", "loudness_peaks_per_sec", "equivalent_sound_level", "voiced_fraction",
]
DURATION_STATS = ["count", "total", "mean", "std", "median", "min", "max", "fraction"]


def _acoustic_names() -> List[str]:
    names = [f"f0_hz_{f}" for f in FULL_FUNCTIONALS]
    names += [f"loudness_{f}" for f in FULL_FUNCTIONALS]
    names += [f"energy_db_{f}" for f in FULL_FUNCTIONALS]
    for c in range(N_MFCC):
        names += [f"mfcc{c}_mean", f"mfcc{c}_std"]
    for lld in VOICED_LLDS:
        names += [f"{lld}_voiced_mean", f"{lld}_voiced_std"]
    names += [f"{lld}_unvoiced_mean" for lld in UNVOICED_LLDS]
    names += ["voicing_mean", "voicing_std", "zcr_mean", "zcr_std", "flatness_mean", "flatness_std"]
    names += ["f0_semitone_mean", "f0_semitone_std"]
    names += TEMPORAL
    names += ["f0_valid"]
    return names


ACOUSTIC_NAMES = _acoustic_names()
RATE_NAMES = ["speaking_rate_mean", "speaking_rate_std"]
DURATION_NAMES = [f"{kind}_{stat}" for kind in SEGMENT_KINDS for stat in DURATION_STATS] + ["alternation_rate"]
HANDCRAFTED_NAMES = ACOUSTIC_NAMES + RATE_NAMES + DURATION_NAMES

assert len(ACOUSTIC_NAMES) == ACOUSTIC_DIM
assert len(DURATION_NAMES) == DURATION_DIM


@dataclass
class FrameSeries:
    frame_rate: float
    f0: np.ndarray  # Hz, 0 where unvoiced
    voicing: np.ndarray
    energy: np.ndarray  # dB, floored
    loudness: np.ndarray
    mfcc: np.ndarray  # (frames, 13)
    centroid: np.ndarray
    flux: np.ndarray
    slope: np.ndarray
    hnr: np.ndarray
    alpha_ratio: np.ndarray
    hammarberg: np.ndarray
    flatness: np.ndarray
    zcr: np.ndarray
    amplitude: np.ndarray  # frame RMS
    secondary_periodicity: np.ndarray  # best non-harmonic CMNDF dip, 1 when none

    def __len__(self) -> int:
        return len(self.f0)

    @property
    def voiced(self) -> np.ndarray:
        return self.f0 > 0

    @property
    def duration(self) -> float:
        return len(self.f0) / self.frame_rate


@dataclass
class SegmentList:
    duration: float
    segments: List[Tuple[float, float, str]] = field(default_factory=list)

    def of_kind(self, kind: str) -> List[Tuple[float, float]]:
        return [(start, end) for start, end, k in self.segments if k == kind]

    def durations(self, kind: str) -> np.ndarray:
        return np.array([end - start for start, end in self.of_kind(kind)], dtype=np.float64)


@dataclass
class HandcraftedVector:
    values: np.ndarray
    schema_id: str = HANDCRAFTED_SCHEMA

    def __post_init__(self):
        if self.values.shape != (HANDCRAFTED_DIM,):
            raise FeatureDimensionError("handcrafted", HANDCRAFTED_DIM, int(self.values.size))


@dataclass
class Standardizer:
    mean: np.ndarray
    std: np.ndarray  # already floored at epsilon
    epsilon: float = 1e-8

    def apply(self, values: np.ndarray) -> np.ndarray:
        return (np.asarray(values, dtype=np.float64) - self.mean) / self.std


# === PITCH ===
def _cmndf(frames: np.ndarray, tau_max: int) -> np.ndarray:
    """Cumulative mean normalized difference for every frame (rows)"""
    n_frames, length = frames.shape
    width = length - tau_max
    n_fft = 1 << int(np.ceil(np.log2(length + width)))

    spectrum = rfft(frames, n_fft, axis=1)
    head = rfft(frames[:, :width], n_fft, axis=1)
    corr = irfft(spectrum * np.conj(head), n_fft, axis=1)[:, :tau_max + 1]

    cumulative = np.concatenate([np.zeros((n_frames, 1)), np.cumsum(frames ** 2, axis=1)], axis=1)
    taus = np.arange(tau_max + 1)
    energy_0 = cumulative[:, width][:, None]
    energy_tau = cumulative[:, taus + width] - cumulative[:, taus]
    diff = np.maximum(energy_0 + energy_tau - 2.0 * corr, 0.0)

    running = np.cumsum(diff[:, 1:], axis=1)
    out = np.ones_like(diff)
    with np.errstate(divide="ignore", invalid="ignore"):
        normalized = diff[:, 1:] * taus[1:] / running
    out[:, 1:] = np.where(running > 0, normalized, 1.0)
    return out


def _yin(frames: np.ndarray, sample_rate: int, with_secondary: bool = False):
    """Vectorized YIN over frames; returns f0, voicing (and secondary dips)"""
    frames = np.asarray(frames, dtype=np.float64)
    tau_min = int(np.floor(sample_rate / settings.f0_max_hz))
    tau_max = int(np.ceil(sample_rate / settings.f0_min_hz))
    if frames.shape[1] < 2 * tau_max:
        raise SpeechStyleError(f"pitch frame of {frames.shape[1]} samples is shorter than {2 * tau_max}")

    n_frames = frames.shape[0]
    power = np.mean(frames ** 2, axis=1)
    cmndf = _cmndf(frames, tau_max)

    window = cmndf[:, tau_min:tau_max + 1]
    interior = window[:, 1:-1]
    local_min = (interior <= window[:, :-2]) & (interior <= window[:, 2:])
    candidates = local_min & (interior < YIN_THRESHOLD)
    has_candidate = candidates.any(axis=1)
    first = np.argmax(candidates, axis=1) + 1
    best = np.where(has_candidate, first, np.argmin(window, axis=1)) + tau_min

    rows = np.arange(n_frames)
    center = cmndf[rows, best]
    left = cmndf[rows, np.maximum(best - 1, 0)]
    right = cmndf[rows, np.minimum(best + 1, tau_max)]
    denom = left - 2.0 * center + right
    with np.errstate(divide="ignore", invalid="ignore"):
        shift = np.where(denom > 0, 0.5 * (left - right) / denom, 0.0)
    shift = np.clip(shift, -1.0, 1.0)

    voicing = np.clip(1.0 - center, 0.0, 1.0)
    silent = power < SILENCE_POWER
    voicing[silent] = 0.0
    f0 = sample_rate / (best + shift)
    f0 = np.clip(f0, settings.f0_min_hz, settings.f0_max_hz)
    f0 = np.where(voicing >= VOICING_THRESHOLD, f0, 0.0)

    if not with_secondary:
        return f0, voicing

    taus = np.arange(tau_min, tau_max + 1)[1:-1]
    harmonic = np.zeros_like(local_min)
    for multiple in (1 / 3, 1 / 2, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10):
        target = multiple * best[:, None]
        harmonic |= np.abs(taus[None, :] - target) <= np.maximum(2.0, 0.06 * target)
    spare = local_min & ~harmonic
    secondary = np.where(spare, interior, 1.0).min(axis=1)
    secondary[silent] = 1.0
    return f0, voicing, secondary


def estimate_f0(frame: np.ndarray, sample_rate: int = None) -> Tuple[float, float]:
    """YIN estimate for one frame: (f0 Hz or 0, voicing probability)"""
    sample_rate = sample_rate or settings.sample_rate
    f0, voicing = _yin(np.asarray(frame)[None, :], sample_rate)
    return float(f0[0]), float(voicing[0])


# === LOW-LEVEL DESCRIPTORS ===
def _mel_filterbank(sample_rate: int, n_fft: int, n_mels: int, low: float = 20.0, high: float = None) -> np.ndarray:
    high = high or sample_rate / 2
    mel_points = np.linspace(2595 * np.log10(1 + low / 700), 2595 * np.log10(1 + high / 700), n_mels + 2)
    hz_points = 700 * (10 ** (mel_points / 2595) - 1)
    bins = np.fft.rfftfreq(n_fft, 1.0 / sample_rate)
    bank = np.zeros((n_mels, len(bins)))
    for j in range(n_mels):
        lo, mid, hi = hz_points[j], hz_points[j + 1], hz_points[j + 2]
        rising = (bins - lo) / (mid - lo)
        falling = (hi - bins) / (hi - mid)
        bank[j] = np.maximum(0.0, np.minimum(rising, falling))
    return bank


def _band(freqs: np.ndarray, low: float, high: float) -> np.ndarray:
    return (freqs >= low) & (freqs < high)


def frame_count(n_samples: int) -> int:
    window, hop = settings.window_samples, settings.hop_samples
    return 1 + max(n_samples - window, 0) // hop


def extract_llds(snippet: Snippet) -> FrameSeries:
    """Per-frame descriptors at 100 frames/s (25 ms window, 10 ms hop)"""
    sample_rate = settings.sample_rate
    window, hop = settings.window_samples, settings.hop_samples
    x = np.asarray(snippet.samples, dtype=np.float64)
    if len(x) < window:
        x = np.pad(x, (0, window - len(x)))
    n_frames = frame_count(len(x))

    frames = sliding_window_view(x, window)[::hop][:n_frames]
    tapered = frames * get_window("hann", window, fftbins=True)

    # pitch frames share the frame centres but span 60 ms
    pitch_len = int(round(PITCH_FRAME_SECONDS * sample_rate))
    half = pitch_len // 2
    padded = np.pad(x, (half, pitch_len - half))
    start = window // 2
    pitch_frames = sliding_window_view(padded, pitch_len)[start::hop][:n_frames]
    f0, voicing, secondary = _yin(pitch_frames, sample_rate, with_secondary=True)

    power_mean = np.mean(tapered ** 2, axis=1)
    energy = np.maximum(10.0 * np.log10(power_mean + POWER_FLOOR), ENERGY_FLOOR_DB)
    loudness = np.power(power_mean, 0.3)
    amplitude = np.sqrt(np.mean(frames ** 2, axis=1))

    spectrum = np.abs(rfft(tapered, N_FFT, axis=1))
    power = spectrum ** 2 / N_FFT
    freqs = np.fft.rfftfreq(N_FFT, 1.0 / sample_rate)
    total = power.sum(axis=1)

    mel = _mel_filterbank(sample_rate, N_FFT, N_MELS)
    mfcc = dct(np.log(power @ mel.T + POWER_FLOOR), type=2, axis=1, norm="ortho")[:, :N_MFCC]

    with np.errstate(divide="ignore", invalid="ignore"):
        centroid = np.where(total > POWER_FLOOR, (power @ freqs) / total, 0.0)

    magnitude = spectrum / (spectrum.sum(axis=1, keepdims=True) + POWER_FLOOR)
    flux = np.zeros(n_frames)
    if n_frames > 1:
        flux[1:] = np.sqrt(np.sum(np.diff(magnitude, axis=0) ** 2, axis=1))

    low_band = _band(freqs, 0.0, 5000.0)
    f_khz = freqs[low_band] / 1000.0
    log_power = 10.0 * np.log10(power[:, low_band] + POWER_FLOOR)
    f_centered = f_khz - f_khz.mean()
    slope = (log_power - log_power.mean(axis=1, keepdims=True)) @ f_centered / np.sum(f_centered ** 2)

    alpha_ratio = 10.0 * np.log10(
        (power[:, _band(freqs, 50.0, 1000.0)].sum(axis=1) + POWER_FLOOR)
        / (power[:, _band(freqs, 1000.0, 5000.0)].sum(axis=1) + POWER_FLOOR)
    )
    hammarberg = 10.0 * np.log10(
        (power[:, _band(freqs, 0.0, 2000.0)].max(axis=1) + POWER_FLOOR)
        / (power[:, _band(freqs, 2000.0, 5000.0)].max(axis=1) + POWER_FLOOR)
    )
    flatness = np.exp(np.mean(np.log(power + POWER_FLOOR), axis=1)) / (np.mean(power, axis=1) + POWER_FLOOR)
    flatness = np.clip(flatness, 0.0, 1.0)

    signs = np.signbit(frames)
    zcr = np.mean(signs[:, 1:] != signs[:, :-1], axis=1)

    periodic = np.clip(voicing, 1e-3, 1.0 - 1e-3)
    hnr = np.clip(10.0 * np.log10(periodic / (1.0 - periodic)), -HNR_LIMIT_DB, HNR_LIMIT_DB)

    return FrameSeries(
        frame_rate=settings.frame_rate,
        f0=f0,
        voicing=voicing,
        energy=energy,
        loudness=loudness,
        mfcc=mfcc,
        centroid=centroid,
        flux=flux,
        slope=slope,
        hnr=hnr,
        alpha_ratio=alpha_ratio,
        hammarberg=hammarberg,
        flatness=flatness,
        zcr=zcr,
        amplitude=amplitude,
        secondary_periodicity=secondary,
    )


# === FUNCTIONALS ===
def _mean_std(values: np.ndarray) -> List[float]:
    if values.size == 0:
        return [0.0, 0.0]
    return [float(values.mean()), float(values.std())]


def _slopes(values: np.ndarray, mask: np.ndarray, frame_rate: float) -> List[float]:
    """Mean rising and falling slope over consecutive frames that are both in mask"""
    if values.size < 2:
        return [0.0, 0.0]
    pairs = mask[1:] & mask[:-1]
    deltas = np.diff(values)[pairs] * frame_rate
    rising, falling = deltas[deltas > 0], -deltas[deltas < 0]
    return [float(rising.mean()) if rising.size else 0.0,
            float(falling.mean()) if falling.size else 0.0]


def _full(values: np.ndarray, mask: np.ndarray, frame_rate: float) -> List[float]:
    selected = values[mask]
    if selected.size == 0:
        return [0.0] * len(FULL_FUNCTIONALS)
    p20, p50, p80 = np.percentile(selected, [20, 50, 80])
    return [float(selected.mean()), float(selected.std()), float(p20), float(p50), float(p80),
            float(p80 - p20)] + _slopes(values, mask, frame_rate)


def _perturbation(values: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Relative change between consecutive frames that are both in mask"""
    pairs = mask[1:] & mask[:-1]
    if not pairs.any():
        return np.zeros(0)
    reference = values[mask].mean()
    if reference <= 0:
        return np.zeros(0)
    return np.abs(np.diff(values))[pairs] / reference


def _run_lengths(mask: np.ndarray, frame_rate: float) -> np.ndarray:
    return np.array([(stop - start) / frame_rate for start, stop in runs(mask)], dtype=np.float64)


def compute_functionals(series: FrameSeries) -> np.ndarray:
    """The 88 acoustic functionals in ACOUSTIC_NAMES order"""
    n = len(series)
    if n == 0:
        raise SpeechStyleError("cannot compute functionals of an empty frame series")

    rate = series.frame_rate
    voiced = series.voiced
    unvoiced = ~voiced
    everything = np.ones(n, dtype=bool)

    values: List[float] = []
    values += _full(series.f0, voiced, rate)
    values += _full(series.loudness, everything, rate)
    values += _full(series.energy, everything, rate)
    for c in range(N_MFCC):
        values += _mean_std(series.mfcc[:, c])

    periods = np.where(voiced, 1.0 / np.where(voiced, series.f0, 1.0), 0.0)
    voiced_llds = {
        "centroid": series.centroid[voiced],
        "flux": series.flux[voiced],
        "slope": series.slope[voiced],
        "hnr": series.hnr[voiced],
        "alpha_ratio": series.alpha_ratio[voiced],
        "hammarberg": series.hammarberg[voiced],
        "jitter": _perturbation(periods, voiced),
        "shimmer": _perturbation(series.amplitude, voiced),
    }
    for name in VOICED_LLDS:
        values += _mean_std(voiced_llds[name])
    for name in UNVOICED_LLDS:
        selected = getattr(series, name)[unvoiced]
        values.append(float(selected.mean()) if selected.size else 0.0)

    values += _mean_std(series.voicing)
    values += _mean_std(series.zcr)
    values += _mean_std(series.flatness)
    semitones = 12.0 * np.log2(series.f0[voiced] / 27.5) if voiced.any() else np.zeros(0)
    values += _mean_std(semitones)

    duration = n / rate
    voiced_runs = _run_lengths(voiced, rate)
    unvoiced_runs = _run_lengths(unvoiced, rate)
    values += _mean_std(voiced_runs)
    values += _mean_std(unvoiced_runs)
    values.append(len(voiced_runs) / duration)
    peak_height = series.loudness.max()
    if peak_height > 0:
        peaks, _ = find_peaks(series.loudness, prominence=0.05 * peak_height)
        values.append(len(peaks) / duration)
    else:
        values.append(0.0)
    mean_power = np.mean(10.0 ** (series.energy / 10.0))
    values.append(float(max(10.0 * np.log10(mean_power), ENERGY_FLOOR_DB)))
    values.append(float(voiced.mean()))
    values.append(1.0 if voiced.any() else 0.0)

    out = np.asarray(values, dtype=np.float64)
    if out.size != ACOUSTIC_DIM:
        raise FeatureDimensionError("acoustic", ACOUSTIC_DIM, out.size)
    return np.nan_to_num(out, nan=0.0, posinf=0.0, neginf=0.0)


# === SEGMENTATION ===
def _frame_boundary(index: int, n_frames: int, duration: float) -> float:
    """Time of the boundary before frame `index`"""
    if index <= 0:
        return 0.0
    if index >= n_frames:
        return duration
    hop = settings.hop_samples / settings.sample_rate
    offset = (settings.window_samples - settings.hop_samples) / (2.0 * settings.sample_rate)
    return min(index * hop + offset, duration)


def speech_mask(series: FrameSeries) -> np.ndarray:
    """Adaptive energy threshold (floor + k * MAD) with hangover gap filling"""
    energy = uniform_filter1d(series.energy, size=5, mode="nearest")
    low, high = np.percentile(energy, [5, 90])
    quiet = energy[energy <= np.percentile(energy, 20)]
    mad = float(np.median(np.abs(quiet - np.median(quiet)))) if quiet.size else 0.0

    threshold = low + max(settings.vad_mad_k * mad, settings.vad_min_margin_db)
    # a floor estimated inside speech must not cut away the bulk of it
    threshold = min(threshold, (low + high) / 2.0)
    threshold = max(threshold, settings.vad_silence_db)
    if high - low < settings.vad_min_margin_db:
        # stationary snippet: decide on absolute level
        threshold = settings.vad_silence_db
    mask = energy > threshold

    hangover = int(round(settings.vad_hangover_ms / 1000.0 * series.frame_rate))
    pauses = runs(~mask)
    for start, stop in pauses:
        if start > 0 and stop < len(mask) and stop - start < hangover:
            mask[start:stop] = True

    shortest = int(round(MIN_SPEECH_SECONDS * series.frame_rate))
    for start, stop in runs(mask):
        if stop - start < shortest:
            mask[start:stop] = False
    return mask


def detect_speech_segments(snippet: Snippet, series: Optional[FrameSeries] = None) -> SegmentList:
    """Speech / non-speech tiling plus approximate overlap segments"""
    if series is None:
        series = extract_llds(snippet)
    duration = len(snippet.samples) / settings.sample_rate
    n = len(series)
    speech = speech_mask(series)

    segments: List[Tuple[float, float, str]] = []
    for start, stop in runs(speech):
        segments.append((_frame_boundary(start, n, duration), _frame_boundary(stop, n, duration), "speech"))
    for start, stop in runs(~speech):
        segments.append((_frame_boundary(start, n, duration), _frame_boundary(stop, n, duration), "nonspeech"))

    # approximate: a second periodicity inside tonal speech hints at two voices
    overlap = speech & series.voiced & (series.secondary_periodicity < OVERLAP_SECONDARY) \
        & (series.flatness < OVERLAP_FLATNESS)
    shortest = int(round(OVERLAP_MIN_SECONDS * series.frame_rate))
    for start, stop in runs(overlap):
        if stop - start >= shortest:
            segments.append((_frame_boundary(start, n, duration), _frame_boundary(stop, n, duration), "overlap"))

    segments = [s for s in segments if s[1] > s[0]]
    segments.sort(key=lambda s: (s[0], SEGMENT_KINDS.index(s[2])))
    return SegmentList(duration=duration, segments=segments)


def duration_stats(segments: SegmentList) -> np.ndarray:
    """8 statistics for each segment kind plus an alternation rate (25 values)"""
    values: List[float] = []
    for kind in SEGMENT_KINDS:
        durations = segments.durations(kind)
        if durations.size == 0:
            values += [0.0] * len(DURATION_STATS)
            continue
        total = float(durations.sum())
        values += [
            float(durations.size),
            total,
            float(durations.mean()),
            float(durations.std()),
            float(np.median(durations)),
            float(durations.min()),
            float(durations.max()),
            total / segments.duration if segments.duration > 0 else 0.0,
        ]

    speech = segments.of_kind("speech")
    quick = sum(1 for (_, end), (start, _) in zip(speech[:-1], speech[1:]) if start - end < QUICK_RESUME_SECONDS)
    turns = quick + len(segments.of_kind("overlap"))
    values.append(60.0 * turns / segments.duration if segments.duration > 0 else 0.0)
    return np.asarray(values, dtype=np.float64)


# === SPEAKING RATE ===
def speaking_rate(snippet: Snippet, series: Optional[FrameSeries] = None) -> Tuple[float, float]:
    """Syllable nuclei per second: (mean, std) over 1 s windows with voicing"""
    if series is None:
        series = extract_llds(snippet)
    voiced = series.voiced
    if not voiced.any():
        return 0.0, 0.0

    energy = uniform_filter1d(series.energy, size=5, mode="nearest")
    distance = max(1, int(round(NUCLEUS_MIN_GAP_SECONDS * series.frame_rate)))
    peaks, _ = find_peaks(energy, prominence=NUCLEUS_PROMINENCE_DB, distance=distance)
    nuclei = peaks[voiced[peaks]] if peaks.size else peaks

    per_window = int(round(series.frame_rate))
    n_windows = len(series) // per_window
    counts = []
    for w in range(n_windows):
        lo, hi = w * per_window, (w + 1) * per_window
        if voiced[lo:hi].any():
            counts.append(np.count_nonzero((nuclei >= lo) & (nuclei < hi)))
    if not counts:
        return 0.0, 0.0
    counts = np.asarray(counts, dtype=np.float64)
    return float(counts.mean()), float(counts.std())


# === ASSEMBLY ===
def assemble_handcrafted(acoustic: Sequence[float], stats: Sequence[float], rate: Sequence[float]) -> HandcraftedVector:
    """Concatenate [acoustic | rate | stats] into the 115-dim vector"""
    for component, values, expected in (("acoustic", acoustic, ACOUSTIC_DIM),
                                        ("stats", stats, DURATION_DIM),
                                        ("rate", rate, RATE_DIM)):
        if len(values) != expected:
            raise FeatureDimensionError(component, expected, len(values))
    values = np.concatenate([np.asarray(acoustic, dtype=np.float64),
                             np.asarray(rate, dtype=np.float64),
                             np.asarray(stats, dtype=np.float64)])
    if not np.all(np.isfinite(values)):
        raise SpeechStyleError("handcrafted vector contains non-finite values")
    return HandcraftedVector(values=values.astype(np.float32))


def extract_handcrafted(snippet: Snippet) -> HandcraftedVector:
    """Full 115-dim extraction for one snippet"""
    series = extract_llds(snippet)
    acoustic = compute_functionals(series)
    segments = detect_speech_segments(snippet, series)
    return assemble_handcrafted(acoustic, duration_stats(segments), speaking_rate(snippet, series))


def extract_egemaps(snippet: Snippet) -> np.ndarray:
    """The 88 acoustic functionals alone"""
    return compute_functionals(extract_llds(snippet)).astype(np.float32)


def schema_manifest(kind: str = "handcrafted") -> str:
    """Feature names in vector order, one per line"""
    names = HANDCRAFTED_NAMES if kind == "handcrafted" else ACOUSTIC_NAMES
    schema = HANDCRAFTED_SCHEMA if kind == "handcrafted" else EGEMAPS_SCHEMA
    lines = [f"# {schema} ({len(names)} features)"]
    lines += [f"{i}\t{name}" for i, name in enumerate(names)]
    return "\n".join(lines) + "\n"


# === STANDARDIZATION ===
def fit_standardizer(vectors, epsilon: float = 1e-8) -> Standardizer:
    """Per-dimension mean and std of training-fold vectors"""
    matrix = np.asarray([getattr(v, "values", v) for v in vectors], dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] < 2:
        raise SpeechStyleError("standardizer needs at least 2 training vectors")
    std = np.maximum(matrix.std(axis=0), epsilon)
    return Standardizer(mean=matrix.mean(axis=0), std=std, epsilon=epsilon)


def apply_standardizer(vector, standardizer: Standardizer) -> np.ndarray:
    return standardizer.apply(getattr(vector, "values", vector))
