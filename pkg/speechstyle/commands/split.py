import logging
from pathlib import Path

from . import add_manifest_args, load_records, run_config, write_run_json
from ..services import corpus
from ..utils.helpers import ensure_dir

logger = logging.getLogger(__name__)

FOLDS_FILE = "folds.json"


def register(subparsers) -> None:
    parser = subparsers.add_parser("split", help="assign episodes to stratified folds")
    add_manifest_args(parser)
    parser.add_argument("--out", required=True)
    parser.add_argument("--folds", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    parser.set_defaults(handler=run)


def run(args) -> int:
    config = run_config(args)
    records = load_records(config)
    folds = corpus.stratified_kfold(records, config.folds, config.seed)
    out = ensure_dir(config.out)
    corpus.write_folds(folds, str(out / FOLDS_FILE))
    write_run_json(config, str(out))
    logger.info("fold sizes: %s", folds.sizes())
    return 0


def folds_for(records, out_dir: str, k: int, seed: int):
    """Reuse out_dir/folds.json when present, otherwise split and save"""
    path = Path(out_dir) / FOLDS_FILE
    if path.is_file():
        folds = corpus.read_folds(str(path))
        missing = [r.episode_id for r in records if r.episode_id not in folds.assignment]
        if not missing and folds.k == k:
            return folds
        logger.warning("%s does not cover the manifest; re-splitting", path)
    folds = corpus.stratified_kfold(records, k, seed)
    corpus.write_folds(folds, str(path))
    return folds
