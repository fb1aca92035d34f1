import json

import numpy as np
import pytest

from speechstyle.main import main
from speechstyle.schemas import SCRIPTED_PROFILE
from speechstyle.services import corpus, evaluation, features, synth

from .conftest import SR, write_wav


def run(*argv) -> int:
    return main([str(a) for a in argv])


def read_jsonl(path) -> list:
    return [json.loads(line) for line in path.read_text().splitlines() if line.strip()]


@pytest.fixture(scope="module")
def pipeline(small_corpus, tmp_path_factory):
    """extract, train and evaluate over the small synthetic corpus"""
    root = tmp_path_factory.mktemp("pipeline")
    manifest = small_corpus / "manifest.csv"
    feature_dir, run_dir = root / "features", root / "run"
    assert run("extract", "--manifest", manifest, "--out", feature_dir) == 0
    assert run("train", "--manifest", manifest, "--features", feature_dir, "--out", run_dir,
               "--max-epochs", 3) == 0
    assert run("evaluate", "--manifest", manifest, "--features", feature_dir, "--out", run_dir) == 0
    return {"root": root, "manifest": manifest, "features": feature_dir, "run": run_dir}


# === EXTRACT ===
def test_extract_writes_one_file_per_snippet(pipeline):
    files = sorted((pipeline["features"] / "handcrafted").glob("*/*.ssf"))
    assert len(files) == 12 * 2
    assert (pipeline["features"] / "schema.handcrafted.txt").is_file()
    run_json = json.loads((pipeline["features"] / "run.extract.json").read_text())
    assert run_json["schema_id"] == features.schema_id_for("handcrafted")


def test_extract_skips_up_to_date_and_reports_failures(small_corpus, tmp_path):
    records = corpus.load_manifest(str(small_corpus / "manifest.csv"))[:2]
    missing = records[0].model_copy(update={"episode_id": "missing", "audio_path": str(tmp_path / "none.wav")})
    manifest = tmp_path / "manifest.csv"
    corpus.write_manifest(records + [missing], str(manifest))

    assert run("extract", "--manifest", manifest, "--out", tmp_path / "a") == 1
    log = {row["episode_id"]: row for row in read_jsonl(tmp_path / "a" / "extract.handcrafted.log.jsonl")}
    assert log["missing"]["status"] == "failed"
    assert [log[r.episode_id]["written"] for r in records] == [2, 2]

    assert run("extract", "--manifest", manifest, "--out", tmp_path / "a") == 1
    log = read_jsonl(tmp_path / "a" / "extract.handcrafted.log.jsonl")
    assert sum(row.get("written", 0) for row in log) == 0

    assert run("extract", "--manifest", manifest, "--out", tmp_path / "b", "--force") == 1
    for path in sorted((tmp_path / "a" / "handcrafted").glob("*/*.ssf")):
        twin = tmp_path / "b" / path.relative_to(tmp_path / "a")
        assert path.read_bytes() == twin.read_bytes()


def test_missing_manifest_exits_with_usage_error(tmp_path):
    assert run("extract", "--manifest", tmp_path / "nope.csv", "--out", tmp_path) == 2


def test_missing_features_directory(pipeline, tmp_path):
    assert run("train", "--manifest", pipeline["manifest"], "--features", tmp_path / "nope",
               "--out", tmp_path) == 2


# === TRAIN / EVALUATE ===
def test_one_checkpoint_per_fold(pipeline):
    assert sorted(p.name for p in pipeline["run"].glob("fold*.ssc")) == [f"fold{i}.ssc" for i in range(5)]
    folds = corpus.read_folds(str(pipeline["run"] / "folds.json"))
    assert sorted(folds.assignment) == sorted(r.episode_id for r in corpus.load_manifest(str(pipeline["manifest"])))
    log = read_jsonl(pipeline["run"] / "train.log.jsonl")
    assert len(log) == 5 * 3


def test_report_has_every_fold(pipeline):
    report = json.loads((pipeline["run"] / "report.json").read_text())
    assert [f["fold"] for f in report["folds"]] == list(range(5))
    assert all("auc" in f for f in report["folds"])
    assert report["schema_id"] == features.schema_id_for("handcrafted")
    assert (pipeline["run"] / "report.txt").is_file()
    assert (pipeline["run"] / "histogram.csv").is_file()

    predictions = evaluation.read_predictions(str(pipeline["run"] / "predictions.jsonl"))
    assert len(predictions) == 12
    assert all(len(p.snippet_scores) == 2 for p in predictions)


def test_report_re_aggregates_predictions(pipeline, tmp_path, capsys):
    assert run("report", "--input", pipeline["run"] / "predictions.jsonl", "--out", tmp_path,
               "--aggregation", "mean") == 0
    assert capsys.readouterr().out.startswith("speechstyle")
    mean_report = evaluation.read_report(str(tmp_path / "report.json"))
    median_report = evaluation.read_report(str(pipeline["run"] / "report.json"))
    assert mean_report.aggregation == "mean" and median_report.aggregation == "median"
    # two snippets per episode: mean and median agree
    for name in ("f1_scripted", "accuracy"):
        assert mean_report.summary[name].mean == pytest.approx(median_report.summary[name].mean)


def test_evaluate_with_mean_aggregation(pipeline, tmp_path):
    assert run("evaluate", "--manifest", pipeline["manifest"], "--features", pipeline["features"],
               "--checkpoints", pipeline["run"], "--out", tmp_path, "--aggregation", "mean") == 0
    report = evaluation.read_report(str(tmp_path / "report.json"))
    assert report.aggregation == "mean"
    assert len(report.folds) == 5
    for p in evaluation.read_predictions(str(tmp_path / "predictions.jsonl")):
        assert p.episode_score == pytest.approx(np.mean(p.snippet_scores))


def test_reports_carry_the_training_seed(pipeline, tmp_path):
    run_dir = tmp_path / "run"
    assert run("train", "--manifest", pipeline["manifest"], "--features", pipeline["features"], "--out", run_dir,
               "--max-epochs", 1, "--seed", 42) == 0
    assert run("evaluate", "--manifest", pipeline["manifest"], "--features", pipeline["features"],
               "--out", run_dir) == 0
    assert run("report", "--input", run_dir / "predictions.jsonl", "--out", tmp_path / "mean",
               "--aggregation", "mean") == 0
    assert run("evaluate", "--external-manifest", pipeline["manifest"], "--features", pipeline["features"],
               "--checkpoints", run_dir, "--out", tmp_path / "external") == 0

    assert corpus.read_folds(str(run_dir / "folds.json")).seed == 42
    assert evaluation.read_report(str(run_dir / "report.json")).seed == 42
    assert json.loads((run_dir / "run.evaluate.json").read_text())["seed"] == 42
    assert evaluation.read_report(str(tmp_path / "mean" / "report.json")).seed == 42
    assert evaluation.read_report(str(tmp_path / "external" / "external.json")).seed == 42
    assert all(row["seed"] == 42 for row in read_jsonl(run_dir / "report.jsonl"))


def test_external_corpus_scored_by_every_fold_model(pipeline, tmp_path):
    assert run("evaluate", "--external-manifest", pipeline["manifest"], "--features", pipeline["features"],
               "--checkpoints", pipeline["run"], "--out", tmp_path) == 0
    report = evaluation.read_report(str(tmp_path / "external.json"))
    assert len(report.folds) == 5
    assert all(f.n_episodes == 12 for f in report.folds)


def test_extraction_is_bitwise_reproducible(pipeline, tmp_path):
    assert run("extract", "--manifest", pipeline["manifest"], "--out", tmp_path, "--seed", 9) == 0
    first = sorted((pipeline["features"] / "handcrafted").glob("*/*.ssf"))
    assert len(first) == len(list((tmp_path / "handcrafted").glob("*/*.ssf")))
    for path in first:
        assert path.read_bytes() == (tmp_path / path.relative_to(pipeline["features"])).read_bytes()
    for index in (tmp_path / "handcrafted").glob("*/index.json"):
        assert json.loads(index.read_text())["seed"] == 9


def test_training_and_evaluation_are_deterministic(pipeline, tmp_path):
    assert run("train", "--manifest", pipeline["manifest"], "--features", pipeline["features"],
               "--out", tmp_path, "--max-epochs", 3) == 0
    assert run("evaluate", "--manifest", pipeline["manifest"], "--features", pipeline["features"],
               "--out", tmp_path) == 0
    for name in [f"fold{i}.ssc" for i in range(5)] + ["folds.json", "predictions.jsonl", "report.json"]:
        assert (tmp_path / name).read_bytes() == (pipeline["run"] / name).read_bytes()


# === PREDICT ===
def test_predict_single_snippet(pipeline, tmp_path):
    samples = synth.gen_episode(SCRIPTED_PROFILE, 99, 60).buffer.samples[:30 * SR]
    wav = write_wav(tmp_path / "clip.wav", samples)
    assert run("predict", "--checkpoint", pipeline["run"] / "fold0.ssc", "--input", wav,
               "--out", tmp_path / "scores.json") == 0
    result = json.loads((tmp_path / "scores.json").read_text())
    assert len(result["snippet_scores"]) == 1
    assert result["episode_score"] == result["snippet_scores"][0]
    assert result["predicted"] in ("scripted", "spontaneous")
    assert result["schema_id"] == features.schema_id_for("handcrafted")


def test_predict_missing_checkpoint(tmp_path):
    assert run("predict", "--checkpoint", tmp_path / "none.ssc", "--input", tmp_path / "x.wav") == 2


# === FULL-SIZE CORPORA ===
def full_pipeline(root, *synth_args) -> evaluation.MetricsReport:
    assert run("synth", "--out", root / "corpus", "--seed", 1, "--jobs", -1, "--confusable-fraction", 0.2,
               *synth_args) == 0
    manifest = root / "corpus" / "manifest.csv"
    assert run("extract", "--manifest", manifest, "--out", root / "features", "--jobs", -1) == 0
    assert run("train", "--manifest", manifest, "--features", root / "features", "--out", root / "run",
               "--jobs", -1) == 0
    assert run("evaluate", "--manifest", manifest, "--features", root / "features", "--out", root / "run") == 0
    return evaluation.read_report(str(root / "run" / "report.json"))


@pytest.mark.slow
def test_balanced_synthetic_corpus_is_separable(tmp_path):
    report = full_pipeline(tmp_path)
    assert report.summary["auc"].mean >= 0.95
    assert report.baseline["auc"].mean == 0.5


@pytest.mark.slow
def test_skewed_corpus_favours_the_majority_class(tmp_path):
    report = full_pipeline(tmp_path, "--skew", "700:1230")
    assert report.summary["f1_spontaneous"].mean > report.summary["f1_scripted"].mean
    assert np.isfinite(report.summary["auc"].mean)
