import logging
from pathlib import Path

import numpy as np

from . import add_jobs_arg, add_kind_arg, add_manifest_args, load_records, run_config, write_run_json
from .split import FOLDS_FILE
from ..exceptions import ConfigError, MetricError
from ..services import corpus, evaluation, features, model
from ..utils.helpers import ensure_dir, read_json
from ..workers import checkpoint_path, predict_fold_task, run_parallel, score_episode

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("evaluate", help="score held-out folds and write the metrics report")
    add_manifest_args(parser, required=False)
    add_kind_arg(parser)
    add_jobs_arg(parser)
    parser.add_argument("--features", required=True)
    parser.add_argument("--checkpoints", help="run directory written by train (defaults to --out)")
    parser.add_argument("--out", required=True)
    parser.add_argument("--aggregation", choices=["median", "mean"], default="median")
    parser.add_argument("--lang-groups", dest="lang_groups", help="language = group mapping file")
    parser.add_argument("--external-manifest", dest="external_manifest",
                        help="score an external corpus with every fold model")
    parser.set_defaults(handler=run)


def _trained_seed(config, run_dir: Path):
    """Seed of the run that produced the fold models, from folds.json or run.train.json"""
    folds_file = run_dir / FOLDS_FILE
    if folds_file.is_file():
        return config.model_copy(update={"seed": corpus.read_folds(str(folds_file)).seed})
    train_run = run_dir / "run.train.json"
    if train_run.is_file():
        return config.model_copy(update={"seed": int(read_json(str(train_run))["seed"])})
    logger.warning("no training provenance in %s; reporting seed %d", run_dir, config.seed)
    return config


def _cross_validation(config, records, run_dir: Path, out: Path) -> int:
    folds_file = run_dir / FOLDS_FILE
    if not folds_file.is_file():
        raise ConfigError(f"{folds_file} not found; run train first")
    folds = corpus.read_folds(str(folds_file))
    by_id = {r.episode_id: r for r in records}

    arguments = []
    for fold in range(folds.k):
        members = [by_id[e] for e in folds.members(fold) if e in by_id]
        arguments.append((fold, members, str(checkpoint_path(str(run_dir), fold)), config.features,
                          config.kind, config.aggregation))
    results = run_parallel(predict_fold_task, arguments, config.jobs)

    predictions = [p for r in results if r["status"] == "completed" for p in r["predictions"]]
    if not predictions:
        raise MetricError("no fold produced predictions")
    first = checkpoint_path(str(run_dir), 0)
    schema_id = model.load_checkpoint(str(first)).header.schema_id if first.is_file() else ""

    report = evaluation.cross_val_report(evaluation.metrics_by_fold(predictions), predictions,
                                         corpus.load_language_groups(config.lang_groups),
                                         config.aggregation, config.seed, schema_id)
    evaluation.write_predictions(predictions, str(out / "predictions.jsonl"))
    evaluation.write_report(report, str(out))
    auc = report.summary["auc"]
    if auc.mean is not None:
        logger.info("AUC %.4f ± %.4f over %d folds", auc.mean, auc.std, len(report.folds))
    return 1 if any(r["status"] == "failed" for r in results) else 0


def _external(config, external_manifest: str, run_dir: Path, out: Path) -> None:
    records = load_records(config, external_manifest)
    labels = np.array([r.label.positive for r in records], dtype=int)
    episodes = [features.load_episode(config.features, config.kind, r.episode_id) for r in records]

    per_model, schema_id = [], ""
    fold = 0
    while checkpoint_path(str(run_dir), fold).is_file():
        checkpoint = model.load_checkpoint(str(checkpoint_path(str(run_dir), fold)))
        schema_id = checkpoint.header.schema_id
        scores = np.array([score_episode(checkpoint, e, config.aggregation)[1] for e in episodes])
        per_model.append((labels, scores))
        fold += 1
    if not per_model:
        raise ConfigError(f"no checkpoints in {run_dir}")

    report = evaluation.model_spread_report(per_model, config.aggregation, config.seed, schema_id)
    evaluation.write_report(report, str(out), name="external")
    logger.info("external corpus: %d episodes scored by %d models", len(records), len(per_model))


def run(args) -> int:
    config = run_config(args)
    out = ensure_dir(config.out)
    run_dir = Path(args.checkpoints or config.out)
    config = _trained_seed(config, run_dir)
    if args.external_manifest:
        if not Path(args.external_manifest).is_file():
            raise ConfigError(f"--external-manifest: no such file {args.external_manifest}")
        _external(config, args.external_manifest, run_dir, out)
        write_run_json(config, str(out), external_manifest=args.external_manifest)
        return 0

    if not config.manifest:
        raise ConfigError("--manifest is required unless --external-manifest is given")
    code = _cross_validation(config, load_records(config), run_dir, out)
    write_run_json(config, str(out))
    return code
