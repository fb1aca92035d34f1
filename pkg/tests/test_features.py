import os

import numpy as np
import pytest

from speechstyle import workers
from speechstyle.exceptions import FeatureFileError
from speechstyle.schemas import FoldAssignment
from speechstyle.services import corpus, embeddings, features, model

from .conftest import record


def episode_matrix(tmp_path, episode_id: str, frames: int, dim: int, rng, schema: str = "scores@1") -> str:
    path = tmp_path / "episodes" / f"{episode_id}.ssf"
    path.parent.mkdir(exist_ok=True)
    values = rng.uniform(size=(frames, dim)).astype(np.float32)
    embeddings.write_feature_file(str(path), embeddings.FeatureMatrix(values=values, schema_id=schema))
    return str(path)


def matrix_record(tmp_path, episode_id: str, label: str, rng, frames: int = 200):
    rec = record(episode_id, label)
    return rec.model_copy(update={"feature_path": episode_matrix(tmp_path, episode_id, frames, 8, rng)})


def test_summary_features_per_window(tmp_path, rng):
    rec = matrix_record(tmp_path, "ep1", "scripted", rng)
    out = str(tmp_path / "features")
    assert features.extract_episode(rec, out, "classscore-summary") == 4
    assert sorted(p.name for p in features.episode_dir(out, "classscore-summary", "ep1").iterdir()) == [
        "00000.ssf", "00001.ssf", "00002.ssf", "00003.ssf", "index.json"]

    episode = features.load_episode(out, "classscore-summary", "ep1")
    assert episode.values.shape == (4, 16)
    assert episode.schema_id == embeddings.SUMMARY_SCHEMA


def test_extraction_is_idempotent(tmp_path, rng):
    rec = matrix_record(tmp_path, "ep1", "scripted", rng)
    out = str(tmp_path / "features")
    features.extract_episode(rec, out, "classscore-topk")
    assert features.extract_episode(rec, out, "classscore-topk") == 0
    assert features.extract_episode(rec, out, "classscore-topk", force=True) == 4

    later = os.path.getmtime(rec.feature_path) + 10
    os.utime(rec.feature_path, (later, later))
    assert features.extract_episode(rec, out, "classscore-topk") == 4


def test_embedding_windows_are_pooled_on_load(tmp_path, rng):
    rec = record("ep1").model_copy(update={"feature_path": episode_matrix(tmp_path, "ep1", 3000, 4, rng)})
    out = str(tmp_path / "features")
    assert features.extract_episode(rec, out, "embedding-matrix") == 2

    source = embeddings.read_feature_file(rec.feature_path).values
    episode = features.load_episode(out, "embedding-matrix", "ep1")
    np.testing.assert_allclose(episode.values[0], source[:1500].mean(axis=0), rtol=1e-4)
    assert features.head_for("embedding-matrix", 4).variant == "matrix-head"


def test_missing_source_path(tmp_path):
    with pytest.raises(FeatureFileError, match="feature_path"):
        features.extract_episode(record("ep1"), str(tmp_path), "classscore-summary")


def test_missing_features_on_load(tmp_path):
    with pytest.raises(FeatureFileError):
        features.load_episode(str(tmp_path), "handcrafted", "nope")


def test_partial_extraction_is_not_loaded(tmp_path, rng):
    rec = matrix_record(tmp_path, "ep1", "scripted", rng)
    out = str(tmp_path / "features")
    features.extract_episode(rec, out, "classscore-summary")
    features.snippet_path(out, "classscore-summary", "ep1", 3).unlink()
    with pytest.raises(FeatureFileError, match="index lists 4 snippets, found 3"):
        features.load_episode(out, "classscore-summary", "ep1")

    (features.episode_dir(out, "classscore-summary", "ep1") / features.INDEX_FILE).unlink()
    with pytest.raises(FeatureFileError, match="no complete"):
        features.load_episode(out, "classscore-summary", "ep1")


def test_dataset_labels_follow_episodes(tmp_path, rng):
    records = [matrix_record(tmp_path, "a", "scripted", rng), matrix_record(tmp_path, "b", "spontaneous", rng, 100)]
    out = str(tmp_path / "features")
    for rec in records:
        features.extract_episode(rec, out, "classscore-summary")
    dataset = features.build_dataset(records, out, "classscore-summary")
    assert dataset.x.shape == (4 + 2, 16)
    assert dataset.y.tolist() == [1, 1, 1, 1, 0, 0]
    assert dataset.episode_ids == ["a"] * 4 + ["b"] * 2


def test_standardizer_only_for_audio_kinds(rng):
    train = features.Dataset(rng.normal(3.0, 2.0, size=(40, 5)).astype(np.float32), np.zeros(40), [], "x")
    held_out = features.Dataset(rng.normal(size=(7, 5)).astype(np.float32), np.zeros(7), [], "x")
    standardizer, scaled, (other,) = features.standardize_split(train, [held_out], "handcrafted")
    np.testing.assert_allclose(scaled.x.mean(axis=0), 0.0, atol=1e-5)
    np.testing.assert_allclose(other.x, standardizer.apply(held_out.x), rtol=1e-5)
    assert features.standardize_split(train, [held_out], "classscore-topk")[0] is None


def test_handcrafted_episode(small_corpus):
    rec = corpus.load_manifest(str(small_corpus / "manifest.csv"))[0]
    out = str(small_corpus / "features-test")
    assert features.extract_episode(rec, out, "handcrafted") == 2
    episode = features.load_episode(out, "handcrafted", rec.episode_id)
    assert episode.values.shape == (2, 115)
    assert np.all(np.isfinite(episode.values))


# === WORKER TASKS ===
def test_failed_extraction_is_reported(tmp_path):
    rec = record("gone").model_copy(update={"audio_path": str(tmp_path / "gone.wav")})
    status = workers.extract_episode_task(rec, str(tmp_path), "handcrafted")
    assert status["status"] == "failed" and status["episode_id"] == "gone"


def test_fold_seeds_differ():
    assert workers.fold_seed(0, 1) == workers.fold_seed(0, 1)
    assert len({workers.fold_seed(0, f) for f in range(5)}) == 5


def test_train_and_predict_fold(tmp_path, rng):
    records = [matrix_record(tmp_path, f"e{i}", "scripted" if i % 2 else "spontaneous", rng) for i in range(8)]
    out = str(tmp_path / "features")
    for rec in records:
        features.extract_episode(rec, out, "classscore-summary")
    folds = FoldAssignment(k=2, seed=0, assignment={r.episode_id: i % 4 // 2 for i, r in enumerate(records)})

    status = workers.train_fold_task(0, records, folds, out, "classscore-summary", str(tmp_path), 0, max_epochs=2)
    assert status["status"] == "completed"
    assert status["train_snippets"] == 4 * 4
    assert (tmp_path / "train.fold0.log.jsonl").is_file()

    held_out = [r for r in records if folds.assignment[r.episode_id] == 0]
    result = workers.predict_fold_task(0, held_out, str(workers.checkpoint_path(str(tmp_path), 0)), out,
                                       "classscore-summary", "mean")
    predictions = result["predictions"]
    assert [p.episode_id for p in predictions] == [r.episode_id for r in held_out]
    for p in predictions:
        assert len(p.snippet_scores) == 4
        assert p.episode_score == pytest.approx(np.mean(p.snippet_scores))

    checkpoint = model.load_checkpoint(str(workers.checkpoint_path(str(tmp_path), 0)))
    assert checkpoint.header.schema_id == embeddings.SUMMARY_SCHEMA
    assert checkpoint.standardizer is None
