import numpy as np
import pytest
from scipy.io import wavfile

from speechstyle.exceptions import AudioDecodeError
from speechstyle.services import audio

from .conftest import SR, tone, write_wav


def buffer_of(seconds: float) -> audio.AudioBuffer:
    return audio.AudioBuffer(samples=np.zeros(int(seconds * SR), dtype=np.float32), sample_rate=SR)


def test_stereo_48k_to_mono_16k(tmp_path):
    left = tone(440, 60, sr=48000)
    stereo = np.stack([left, -0.5 * left], axis=1)
    path = write_wav(tmp_path / "stereo.wav", stereo, sr=48000)

    buffer = audio.decode_resample(path)
    assert buffer.sample_rate == SR
    assert buffer.samples.shape == (960000,)


def test_mono_16k_is_unchanged(tmp_path, rng):
    samples = (0.3 * rng.standard_normal(SR)).clip(-1, 1).astype(np.float32)
    buffer = audio.decode_resample(write_wav(tmp_path / "mono.wav", samples))
    assert np.array_equal(buffer.samples, samples)


def test_int16_input_is_scaled(tmp_path):
    wavfile.write(str(tmp_path / "pcm.wav"), SR, np.array([0, 16384, -32768], dtype=np.int16))
    buffer = audio.decode_resample(str(tmp_path / "pcm.wav"))
    assert buffer.samples.tolist() == [0.0, 0.5, -1.0]


def test_resampled_sine_keeps_its_frequency(tmp_path):
    path = write_wav(tmp_path / "sine.wav", tone(1000, 4, sr=44100), sr=44100)
    samples = audio.decode_resample(path).samples
    spectrum = np.abs(np.fft.rfft(samples * np.hanning(len(samples))))
    freqs = np.fft.rfftfreq(len(samples), 1.0 / SR)
    assert abs(freqs[np.argmax(spectrum)] - 1000.0) <= 1.0


def test_corrupt_file(tmp_path):
    path = tmp_path / "broken.wav"
    path.write_bytes(b"RIFF....not really a wave file")
    with pytest.raises(AudioDecodeError):
        audio.decode_resample(str(path))


def test_missing_file(tmp_path):
    with pytest.raises(AudioDecodeError):
        audio.decode_resample(str(tmp_path / "nope.wav"))


def test_zero_length_file(tmp_path):
    path = write_wav(tmp_path / "empty.wav", np.zeros(0, dtype=np.float32))
    with pytest.raises(AudioDecodeError):
        audio.decode_resample(path)


# === CHUNKING ===
def test_75_seconds_pads_the_tail():
    snippets = audio.chunk_episode(buffer_of(75))
    assert len(snippets) == 3
    assert [s.padded_tail for s in snippets] == [0, 0, 15 * SR]
    assert snippets[2].valid_samples == 15 * SR
    assert all(len(s.samples) == 30 * SR for s in snippets)


def test_90_seconds_is_an_exact_multiple():
    snippets = audio.chunk_episode(buffer_of(90))
    assert len(snippets) == 3
    assert all(s.padded_tail == 0 for s in snippets)


def test_63_seconds_drops_a_short_tail():
    assert len(audio.chunk_episode(buffer_of(63))) == 2


def test_short_buffer_gives_no_snippets():
    assert audio.chunk_episode(buffer_of(4)) == []


def test_tail_keeps_the_audio():
    samples = np.arange(40 * SR, dtype=np.float32) / (40 * SR)
    snippets = audio.chunk_episode(audio.AudioBuffer(samples, SR), "ep")
    tail = snippets[1]
    assert np.array_equal(tail.samples[:10 * SR], samples[30 * SR:])
    assert not tail.samples[10 * SR:].any()
    assert (tail.episode_id, tail.index) == ("ep", 1)


@pytest.mark.parametrize("count,expected", [
    (30, list(range(2, 27))),
    (25, list(range(25))),
    (10, list(range(10))),
])
def test_training_window(count, expected):
    snippets = [audio.Snippet("ep", i, np.zeros(1, dtype=np.float32)) for i in range(count)]
    assert [s.index for s in audio.training_window(snippets, 25)] == expected


def test_snippet_cache(tmp_path, rng):
    snippet = audio.Snippet("ep", 3, rng.standard_normal(100).astype(np.float32))
    path = audio.write_snippet_cache(snippet, str(tmp_path))
    assert path.name == "ep.3.pcm"
    assert np.array_equal(audio.read_snippet_cache(str(tmp_path), "ep", 3).samples, snippet.samples)
