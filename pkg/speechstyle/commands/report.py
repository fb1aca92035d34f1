import logging
from pathlib import Path

from . import run_config, write_run_json
from ..exceptions import ConfigError
from ..services import corpus, evaluation
from ..utils.helpers import ensure_dir, read_json

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("report", help="rebuild a report from saved predictions")
    parser.add_argument("--input", required=True, help="predictions.jsonl written by evaluate")
    parser.add_argument("--out", required=True)
    parser.add_argument("--aggregation", choices=["median", "mean"], default="median",
                        help="re-aggregate the stored snippet scores")
    parser.add_argument("--lang-groups", dest="lang_groups")
    parser.add_argument("--seed", type=int, default=None,
                        help="defaults to the seed in run.evaluate.json beside --input")
    parser.set_defaults(handler=run)


def _evaluated_seed(predictions: Path, default: int) -> int:
    provenance = predictions.parent / "run.evaluate.json"
    if not provenance.is_file():
        logger.warning("no run.evaluate.json beside %s; reporting seed %d", predictions, default)
        return default
    return int(read_json(str(provenance))["seed"])


def run(args) -> int:
    config = run_config(args)
    if not Path(args.input).is_file():
        raise ConfigError(f"--input: no such file {args.input}")
    if args.seed is None:
        config = config.model_copy(update={"seed": _evaluated_seed(Path(args.input), config.seed)})

    predictions = [
        p.model_copy(update={"episode_score": evaluation.aggregate(p.snippet_scores, config.aggregation)})
        for p in evaluation.read_predictions(args.input)
    ]
    report = evaluation.cross_val_report(evaluation.metrics_by_fold(predictions), predictions,
                                         corpus.load_language_groups(config.lang_groups),
                                         config.aggregation, config.seed)
    out = ensure_dir(config.out)
    path = evaluation.write_report(report, str(out))
    write_run_json(config, str(out), input=args.input)
    print(path.read_text(encoding="utf-8"), end="")
    return 0
