import json

import numpy as np
import pytest
from scipy.io import wavfile

from speechstyle.exceptions import ConfigError, SpeechStyleError
from speechstyle.schemas import SCRIPTED_PROFILE, SPONTANEOUS_PROFILE, Label, SynthConfig
from speechstyle.services import audio, corpus, synth
from speechstyle.services import handcrafted as hc

NONSPEECH_TOTAL = len(hc.DURATION_STATS) + 1


def cohens_d(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    pooled = np.sqrt(((len(a) - 1) * a.var(ddof=1) + (len(b) - 1) * b.var(ddof=1)) / (len(a) + len(b) - 2))
    return abs(a.mean() - b.mean()) / pooled


@pytest.mark.parametrize("profile", [SCRIPTED_PROFILE, SPONTANEOUS_PROFILE], ids=["scripted", "spontaneous"])
@pytest.mark.parametrize("seed", range(5))
def test_silence_fraction_in_class_range(profile, seed):
    episode = synth.gen_episode(profile, seed, 60)
    low, high = profile.silence_fraction
    assert low <= episode.silence_fraction <= high
    assert len(episode.buffer.samples) == 60 * 16000


def test_pauses_are_near_silent():
    episode = synth.gen_episode(SPONTANEOUS_PROFILE, 3, 60)
    samples = episode.buffer.samples
    gap_start, gap_end = episode.spans[0][1], episode.spans[1][0]
    gap = samples[int(gap_start * 16000) + 10:int(gap_end * 16000) - 10]
    assert gap.size > 0
    assert np.abs(gap).max() < 0.01


def test_same_seed_same_audio():
    first = synth.gen_episode(SCRIPTED_PROFILE, 11, 60)
    second = synth.gen_episode(SCRIPTED_PROFILE, 11, 60)
    assert first.buffer.samples.tobytes() == second.buffer.samples.tobytes()
    assert first.buffer.samples.tobytes() != synth.gen_episode(SCRIPTED_PROFILE, 12, 60).buffer.samples.tobytes()


def test_short_episode_rejected():
    with pytest.raises(SpeechStyleError):
        synth.gen_episode(SCRIPTED_PROFILE, 0, 59.0)


def test_blended_profile_sits_between_the_classes():
    blended = synth.blend_profiles(SCRIPTED_PROFILE, SPONTANEOUS_PROFILE, Label.scripted)
    assert blended.label is Label.scripted
    assert blended.silence_fraction == pytest.approx((0.15, 0.30))
    assert blended.pause_mean_seconds == pytest.approx(0.875)
    episode = synth.gen_episode(blended, 4, 60)
    assert 0.15 <= episode.silence_fraction <= 0.30


@pytest.mark.parametrize("fraction,count", [(0.0, 0), (0.2, 8), (0.25, 10), (1.0, 40)])
def test_confusable_share_of_a_class(fraction, count):
    assert sum(synth.is_confusable(j, fraction) for j in range(40)) == count


# === CONFIG ===
def test_skewed_class_counts():
    assert SynthConfig(episodes_per_class=40, skew=(700, 1230)).class_counts() == (29, 51)
    assert SynthConfig(episodes_per_class=40).class_counts() == (40, 40)


def test_config_file_with_overrides(tmp_path):
    path = tmp_path / "synth.conf"
    path.write_text("# corpus\nseed = 3\nskew = 1:3\nlanguages = hindi, tamil, english\nepisode_seconds = 90\n")
    config = synth.load_synth_config(str(path), seed=9, episodes_per_class=None)
    assert config.seed == 9
    assert config.skew == (1, 3)
    assert config.languages == ["hindi", "tamil", "english"]
    assert config.episode_seconds == 90.0
    assert config.episodes_per_class == 40


def test_invalid_config(tmp_path):
    path = tmp_path / "synth.conf"
    path.write_text("episode_seconds = 20\n")
    with pytest.raises(ConfigError):
        synth.load_synth_config(str(path))


# === CORPUS ===
def test_corpus_manifest(small_corpus):
    records = corpus.load_manifest(str(small_corpus / "manifest.csv"))
    assert len(records) == 12
    assert corpus.class_counts(records) == (6, 6)
    assert {r.language for r in records} == {"lang-a", "lang-b"}
    for record in records:
        assert record.format in synth.FORMATS[record.label]
        rate, data = wavfile.read(record.audio_path)
        assert rate == 16000 and data.dtype == np.int16 and len(data) == 60 * 16000
    assert (small_corpus / "synth.json").is_file()


def test_corpus_reruns_are_identical(tmp_path):
    config = SynthConfig(seed=5, episodes_per_class=2, episode_seconds=60)
    first = synth.gen_corpus(config, str(tmp_path / "a"))
    second = synth.gen_corpus(config, str(tmp_path / "b"), jobs=2)
    assert first == second
    for name in ["manifest.csv", "synth.json"] + [f"audio/{r.episode_id}.wav" for r in first]:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_confusable_episodes_are_recorded(tmp_path):
    config = SynthConfig(seed=2, episodes_per_class=5, episode_seconds=60, confusable_fraction=0.2)
    records = synth.gen_corpus(config, str(tmp_path))
    recorded = json.loads((tmp_path / "synth.json").read_text())
    assert recorded["confusable"] == [records[4].episode_id, records[9].episode_id]
    assert recorded["config"]["confusable_fraction"] == 0.2
    for episode_id in recorded["confusable"]:
        assert 0.15 <= recorded["silence_fraction"][episode_id] <= 0.30


def test_confusable_fraction_out_of_range():
    with pytest.raises(ConfigError):
        synth.load_synth_config(None, confusable_fraction=1.5)


def test_nonspeech_total_separates_classes(small_corpus):
    totals = {Label.scripted: [], Label.spontaneous: []}
    for record in corpus.load_manifest(str(small_corpus / "manifest.csv")):
        for snippet in audio.chunk_episode(audio.decode_resample(record.audio_path), record.episode_id):
            stats = hc.duration_stats(hc.detect_speech_segments(snippet))
            totals[record.label].append(stats[NONSPEECH_TOTAL])
    assert np.mean(totals[Label.spontaneous]) > np.mean(totals[Label.scripted])
    assert cohens_d(totals[Label.scripted], totals[Label.spontaneous]) > 2.0
