import logging

from . import add_jobs_arg
from ..services import synth

logger = logging.getLogger(__name__)


def _ratio(value: str):
    parts = value.replace(":", ",").split(",")
    return tuple(int(p) for p in parts)


def register(subparsers) -> None:
    parser = subparsers.add_parser("synth", help="generate a labeled synthetic corpus")
    parser.add_argument("--out", required=True)
    parser.add_argument("--config", help="key = value synth settings file")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--episodes-per-class", dest="episodes_per_class", type=int, default=None)
    parser.add_argument("--episode-seconds", dest="episode_seconds", type=float, default=None)
    parser.add_argument("--skew", type=_ratio, default=None, help="scripted:spontaneous ratio, e.g. 700:1230")
    parser.add_argument("--confusable-fraction", dest="confusable_fraction", type=float, default=None,
                        help="share of each class generated from the profile halfway between the classes")
    add_jobs_arg(parser)
    parser.set_defaults(handler=run)


def run(args) -> int:
    config = synth.load_synth_config(args.config, seed=args.seed, episodes_per_class=args.episodes_per_class,
                                     episode_seconds=args.episode_seconds, skew=args.skew,
                                     confusable_fraction=args.confusable_fraction)
    records = synth.gen_corpus(config, args.out, jobs=args.jobs)
    print(f"{len(records)} episodes written to {args.out}")
    return 0
