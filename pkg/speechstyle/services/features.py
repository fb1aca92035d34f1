# Per-snippet feature files: extraction, layout on disk and dataset assembly
import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from .. import __version__
from ..config import settings
from ..exceptions import FeatureFileError, SpeechStyleError
from ..schemas import EpisodeRecord, HeadArchitecture
from ..utils.helpers import write_json
from . import audio, embeddings, handcrafted
from .model import pool_frames

logger = logging.getLogger(__name__)

AUDIO_KINDS = ("handcrafted", "egemaps")
MATRIX_KINDS = ("embedding-matrix", "classscore-summary", "classscore-topk")
SNIPPET_SUFFIX = ".ssf"
INDEX_FILE = "index.json"


@dataclass
class EpisodeFeatures:
    episode_id: str
    schema_id: str
    values: np.ndarray  # (snippets, D); embedding matrices are time-pooled


@dataclass
class Dataset:
    x: np.ndarray
    y: np.ndarray
    episode_ids: List[str]  # one per row
    schema_id: str


def schema_id_for(kind: str) -> str:
    return f"{kind}@{__version__}"


def kind_of(schema_id: str) -> str:
    return schema_id.split("@", 1)[0]


def episode_dir(features_dir: str, kind: str, episode_id: str) -> Path:
    return Path(features_dir) / kind / episode_id


def snippet_path(features_dir: str, kind: str, episode_id: str, index: int) -> Path:
    return episode_dir(features_dir, kind, episode_id) / f"{index:05d}{SNIPPET_SUFFIX}"


# === EXTRACTION ===
def snippet_features(kind: str, snippet) -> embeddings.FeatureData:
    """Feature payload for one audio snippet or one matrix window"""
    if kind == "handcrafted":
        vector = handcrafted.extract_handcrafted(snippet)
        return embeddings.FeatureVector(values=vector.values, schema_id=vector.schema_id)
    if kind == "egemaps":
        return embeddings.FeatureVector(values=handcrafted.extract_egemaps(snippet),
                                        schema_id=handcrafted.EGEMAPS_SCHEMA)
    if kind == "classscore-summary":
        return embeddings.class_score_summary(snippet)
    if kind == "classscore-topk":
        return embeddings.class_score_top_k_counts(snippet)
    if kind == "embedding-matrix":
        return embeddings.FeatureMatrix(values=snippet.values, schema_id=embeddings.MATRIX_SCHEMA)
    raise SpeechStyleError(f"unknown feature kind '{kind}'", exit_code=2)


def source_snippets(path: str, kind: str, episode_id: str = "") -> list:
    """Audio snippets or matrix windows covering a whole episode file"""
    if kind in AUDIO_KINDS:
        return audio.chunk_episode(audio.decode_resample(path), episode_id)
    matrix = embeddings.read_feature_file(path)
    if not isinstance(matrix, embeddings.FeatureMatrix):
        raise FeatureFileError(f"{path}: expected an episode-level matrix")
    hop = settings.embedding_hop_seconds if kind == "embedding-matrix" else settings.classscore_hop_seconds
    return embeddings.chunk_matrix(matrix, hop)


def episode_snippets(record: EpisodeRecord, kind: str) -> list:
    source = _source_path(record, kind)
    if not source:
        field = "audio_path" if kind in AUDIO_KINDS else "feature_path"
        raise FeatureFileError(f"{record.episode_id}: no {field} for kind {kind}")
    return source_snippets(source, kind, record.episode_id)


def _source_path(record: EpisodeRecord, kind: str) -> Optional[str]:
    return record.audio_path if kind in AUDIO_KINDS else record.feature_path


def is_up_to_date(record: EpisodeRecord, features_dir: str, kind: str) -> bool:
    index = episode_dir(features_dir, kind, record.episode_id) / INDEX_FILE
    source = _source_path(record, kind)
    if not index.is_file() or not source or not os.path.exists(source):
        return False
    return index.stat().st_mtime >= os.path.getmtime(source)


def extract_episode(record: EpisodeRecord, features_dir: str, kind: str, force: bool = False,
                    seed: int = 0) -> int:
    """
    Write one feature file per snippet; returns the number written (0 when up to date).

    Extraction draws no random numbers; the run seed is recorded in index.json
    so the snippet files stay byte-identical across seeds.
    """
    if not force and is_up_to_date(record, features_dir, kind):
        logger.debug("%s: %s features up to date", record.episode_id, kind)
        return 0

    snippets = episode_snippets(record, kind)
    if not snippets:
        raise FeatureFileError(f"{record.episode_id}: episode too short for a single snippet")

    directory = episode_dir(features_dir, kind, record.episode_id)
    # the index is written last and marks a complete episode
    (directory / INDEX_FILE).unlink(missing_ok=True)
    for stale in directory.glob(f"*{SNIPPET_SUFFIX}"):
        stale.unlink()
    schema_id = ""
    for index, snippet in enumerate(snippets):
        data = snippet_features(kind, snippet)
        schema_id = data.schema_id
        embeddings.write_feature_file(str(snippet_path(features_dir, kind, record.episode_id, index)), data)
    write_json({"episode_id": record.episode_id, "schema_id": schema_id, "snippets": len(snippets),
                "seed": seed, "tool_version": __version__},
               str(directory / INDEX_FILE))
    return len(snippets)


# === LOADING ===
def _as_row(data: embeddings.FeatureData, kind: str) -> np.ndarray:
    if isinstance(data, embeddings.FeatureMatrix):
        fitted = embeddings.fit_frames(data, settings.embedding_frames, kind)
        return pool_frames(fitted.values, settings.embedding_frames).astype(np.float32)
    return data.values


def rows_from_snippets(kind: str, payloads: List[embeddings.FeatureData]) -> np.ndarray:
    return np.stack([_as_row(p, kind) for p in payloads])


def load_episode(features_dir: str, kind: str, episode_id: str) -> EpisodeFeatures:
    """All snippet rows of one episode, in snippet order"""
    directory = episode_dir(features_dir, kind, episode_id)
    index_file = directory / INDEX_FILE
    if not index_file.is_file():
        raise FeatureFileError(f"{episode_id}: no complete {kind} extraction under {features_dir}")
    try:
        expected = int(json.loads(index_file.read_text(encoding="utf-8"))["snippets"])
    except (ValueError, KeyError, TypeError) as e:
        raise FeatureFileError(f"{index_file}: unreadable index: {e}")
    paths = sorted(directory.glob(f"*{SNIPPET_SUFFIX}"))
    if not paths or len(paths) != expected:
        raise FeatureFileError(f"{episode_id}: index lists {expected} snippets, found {len(paths)}")
    payloads = [embeddings.read_feature_file(str(p)) for p in paths]
    schema_ids = {p.schema_id for p in payloads}
    if len(schema_ids) != 1:
        raise FeatureFileError(f"{episode_id}: mixed schema ids {sorted(schema_ids)}")
    return EpisodeFeatures(episode_id, schema_ids.pop(), rows_from_snippets(kind, payloads))


def build_dataset(records: List[EpisodeRecord], features_dir: str, kind: str,
                  window: bool = True) -> Dataset:
    """Snippet rows with episode labels propagated down; training uses the middle window"""
    xs, ys, ids = [], [], []
    schema_id = ""
    for record in records:
        episode = load_episode(features_dir, kind, record.episode_id)
        if schema_id and episode.schema_id != schema_id:
            raise FeatureFileError(f"{record.episode_id}: schema {episode.schema_id} differs from {schema_id}")
        schema_id = episode.schema_id
        rows = episode.values
        if window:
            rows = np.stack(audio.training_window(list(rows)))
        xs.append(rows)
        ys.append(np.full(len(rows), record.label.positive, dtype=np.float32))
        ids.extend([record.episode_id] * len(rows))
    if not xs:
        return Dataset(np.zeros((0, 0), dtype=np.float32), np.zeros(0, dtype=np.float32), [], schema_id)
    return Dataset(np.concatenate(xs), np.concatenate(ys), ids, schema_id)


def head_for(kind: str, dim: int, dropout: float = 0.2) -> HeadArchitecture:
    if kind == "embedding-matrix":
        return HeadArchitecture(variant="matrix-head", input_dim=dim,
                                frames=settings.embedding_frames, dropout=dropout)
    return HeadArchitecture(variant="vector-head", input_dim=dim, dropout=dropout)


def needs_standardizer(kind: str) -> bool:
    return kind in AUDIO_KINDS


def standardize_split(train: Dataset, others: List[Dataset],
                      kind: str) -> Tuple[Optional[handcrafted.Standardizer], Dataset, List[Dataset]]:
    """Fit on the training rows only and apply everywhere"""
    if not needs_standardizer(kind):
        return None, train, others
    standardizer = handcrafted.fit_standardizer(train.x)

    def applied(ds: Dataset) -> Dataset:
        if len(ds.x) == 0:
            return ds
        return Dataset(standardizer.apply(ds.x).astype(np.float32), ds.y, ds.episode_ids, ds.schema_id)

    return standardizer, applied(train), [applied(ds) for ds in others]
