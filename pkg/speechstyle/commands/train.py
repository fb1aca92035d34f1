import logging

from . import add_jobs_arg, add_kind_arg, add_manifest_args, load_records, run_config, write_run_json
from .split import folds_for
from ..utils.helpers import ensure_dir, read_jsonl, write_jsonl
from ..workers import run_parallel, train_fold_task

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("train", help="train one model per cross-validation fold")
    add_manifest_args(parser)
    add_kind_arg(parser)
    add_jobs_arg(parser)
    parser.add_argument("--features", required=True, help="features directory written by extract")
    parser.add_argument("--out", required=True, help="run directory for folds, checkpoints and logs")
    parser.add_argument("--folds", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--inner-val", dest="inner_val", action="store_true",
                        help="select checkpoints on 10%% of the training episodes instead of the held-out fold")
    parser.add_argument("--max-epochs", dest="max_epochs", type=int, default=None)
    parser.set_defaults(handler=run)


def run(args) -> int:
    config = run_config(args)
    records = load_records(config)
    out = ensure_dir(config.out)
    folds = folds_for(records, str(out), config.folds, config.seed)

    arguments = [(fold, records, folds, config.features, config.kind, str(out), config.seed,
                  config.inner_val, args.max_epochs) for fold in range(config.folds)]
    results = run_parallel(train_fold_task, arguments, config.jobs)

    log = []
    for result in results:
        if result["status"] == "completed":
            log.extend(read_jsonl(str(out / f"train.fold{result['fold']}.log.jsonl")))
    write_jsonl(log, str(out / "train.log.jsonl"))
    write_run_json(config, str(out), inner_val=config.inner_val, results=results)

    failed = [r for r in results if r["status"] == "failed"]
    for result in results:
        if result["status"] == "completed":
            logger.info("fold %d: best epoch %d, val_loss %.4f", result["fold"], result["epoch"], result["val_loss"])
    return 1 if failed else 0
