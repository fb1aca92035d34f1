import logging
from pathlib import Path

from . import add_jobs_arg, add_kind_arg, add_manifest_args, load_records, run_config, write_run_json
from ..services import features, handcrafted
from ..utils.helpers import ensure_dir, write_jsonl
from ..workers import extract_episode_task, run_parallel

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("extract", help="write per-snippet feature files")
    add_manifest_args(parser)
    add_kind_arg(parser)
    add_jobs_arg(parser)
    parser.add_argument("--out", required=True, help="features directory")
    parser.add_argument("--force", action="store_true", help="rewrite up-to-date outputs")
    parser.add_argument("--seed", type=int, default=None, help="recorded in index.json and run.extract.json")
    parser.set_defaults(handler=run)


def run(args) -> int:
    config = run_config(args)
    records = load_records(config)
    out = ensure_dir(config.out)

    results = run_parallel(extract_episode_task,
                           [(r, str(out), config.kind, config.force, config.seed) for r in records], config.jobs)
    write_jsonl(results, str(out / f"extract.{config.kind}.log.jsonl"))
    if config.kind in features.AUDIO_KINDS:
        (out / f"schema.{config.kind}.txt").write_text(handcrafted.schema_manifest(config.kind), encoding="utf-8")
    write_run_json(config, str(out), schema_id=features.schema_id_for(config.kind))

    failed = [r for r in results if r["status"] == "failed"]
    written = sum(r.get("written", 0) for r in results)
    logger.info("%s: %d episodes, %d feature files written, %d failed",
                config.kind, len(results), written, len(failed))
    return 1 if failed else 0
