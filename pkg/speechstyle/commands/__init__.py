# Subcommands; each module exposes register(subparsers)
import argparse
from pathlib import Path
from typing import List

from pydantic import ValidationError

from .. import __version__
from ..exceptions import ConfigError, ManifestError
from ..schemas import EpisodeRecord, RunConfig
from ..services import corpus
from ..utils.helpers import ensure_dir, write_json

KINDS = ["handcrafted", "egemaps", "embedding-matrix", "classscore-summary", "classscore-topk"]


def add_manifest_args(parser: argparse.ArgumentParser, required: bool = True) -> None:
    parser.add_argument("--manifest", required=required, help="episode manifest (csv, tsv or jsonl)")
    parser.add_argument("--label-map", dest="label_map", help="format = label mapping file")


def add_kind_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--kind", choices=KINDS, default="handcrafted")


def add_jobs_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--jobs", type=int, default=1, help="worker processes (-1 for all cores)")


def run_config(args: argparse.Namespace) -> RunConfig:
    """Validated view of the parsed flags"""
    fields = {name: getattr(args, name) for name in RunConfig.model_fields
              if getattr(args, name, None) is not None}
    try:
        config = RunConfig(subcommand=args.command, **{k: v for k, v in fields.items() if k != "subcommand"})
    except ValidationError as e:
        raise ConfigError(f"invalid arguments: {e}")
    for name in ("manifest", "label_map", "lang_groups"):
        path = getattr(config, name)
        if path is not None and not Path(path).is_file():
            raise ConfigError(f"--{name.replace('_', '-')}: no such file {path}")
    if config.features is not None and config.subcommand != "extract" and not Path(config.features).is_dir():
        raise ConfigError(f"--features: no such directory {config.features}")
    return config


def load_records(config: RunConfig, manifest: str = None) -> List[EpisodeRecord]:
    mapping = corpus.load_label_mapping(config.label_map)
    summary = corpus.read_manifest(manifest or config.manifest, mapping)
    if not summary.records:
        raise ManifestError(f"{manifest or config.manifest}: no usable episodes", summary.row_errors)
    return summary.records


def write_run_json(config: RunConfig, out_dir: str, **extra) -> None:
    """Provenance record for everything written to out_dir"""
    directory = ensure_dir(out_dir)
    write_json({"tool_version": __version__, "subcommand": config.subcommand, "seed": config.seed,
                "kind": config.kind, "folds": config.folds, "aggregation": config.aggregation, **extra},
               str(directory / f"run.{config.subcommand}.json"))
