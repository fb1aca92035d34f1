import json
import logging
from pathlib import Path

from ..exceptions import ConfigError
from ..services import evaluation, features, model
from ..workers import score_episode

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("predict", help="score one WAV file or episode matrix with a checkpoint")
    parser.add_argument("--checkpoint", required=True)
    parser.add_argument("--input", required=True, help="WAV file, or an episode-level SSF1 matrix")
    parser.add_argument("--aggregation", choices=["median", "mean"], default="median")
    parser.add_argument("--out", help="write the scores as JSON here instead of stdout")
    parser.set_defaults(handler=run)


def run(args) -> int:
    for flag, path in (("--checkpoint", args.checkpoint), ("--input", args.input)):
        if not Path(path).is_file():
            raise ConfigError(f"{flag}: no such file {path}")

    checkpoint = model.load_checkpoint(args.checkpoint)
    kind = features.kind_of(checkpoint.header.schema_id)
    snippets = features.source_snippets(args.input, kind, Path(args.input).stem)
    if not snippets:
        raise ConfigError(f"{args.input}: too short for a single snippet")

    payloads = [features.snippet_features(kind, s) for s in snippets]
    episode = features.EpisodeFeatures(Path(args.input).stem, payloads[0].schema_id,
                                       features.rows_from_snippets(kind, payloads))
    snippet_scores, episode_score = score_episode(checkpoint, episode, args.aggregation)

    result = {
        "input": args.input,
        "schema_id": episode.schema_id,
        "aggregation": args.aggregation,
        "snippet_scores": snippet_scores,
        "episode_score": episode_score,
        "predicted": "scripted" if episode_score >= 0.5 else "spontaneous",
        "seed": checkpoint.header.seed,
    }
    text = json.dumps(result, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    logger.info("%s: %d snippets, episode score %.4f", args.input, len(snippet_scores), episode_score)
    return 0
