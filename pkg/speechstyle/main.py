import argparse
import logging
import logging.config
from pathlib import Path
from typing import List, Optional

from . import __version__
from .commands import evaluate, extract, predict, report, split, synth, train
from .config import settings
from .exceptions import SpeechStyleError

logger = logging.getLogger("speechstyle")

LOG_FORMAT = "%(levelname)-5.5s [%(name)s] %(message)s"


def setup_logging(verbose: bool = False) -> None:
    """fileConfig from logging.ini when present, basicConfig otherwise"""
    path = Path(settings.log_config)
    if path.is_file():
        logging.config.fileConfig(str(path), disable_existing_loggers=False)
    else:
        logging.basicConfig(format=LOG_FORMAT)
        logging.getLogger("speechstyle").setLevel(logging.INFO)
    level = "DEBUG" if verbose else settings.log_level
    if level:
        logging.getLogger("speechstyle").setLevel(level.upper())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="speechstyle", description="Scripted vs spontaneous speech classification")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    subparsers = parser.add_subparsers(dest="command", required=True)

    # Register commands
    for command in (extract, split, train, predict, evaluate, report, synth):
        command.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.verbose)
    try:
        return args.handler(args)
    except SpeechStyleError as e:
        logger.error("%s", e.detail)
        return e.exit_code
