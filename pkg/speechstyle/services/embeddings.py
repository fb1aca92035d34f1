# Precomputed embedding / class-score files and their summarizers
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import List, Union

import numpy as np

from .. import __version__
from ..config import settings
from ..exceptions import (BadMagicError, DimensionOverflowError, FeatureFileError,
                          TruncatedPayloadError)

logger = logging.getLogger(__name__)

MAGIC = b"SSF1"
FORMAT_VERSION = 1
KIND_VECTOR = 0
KIND_MATRIX = 1
DTYPE_F32 = 0
MAX_ELEMENTS = 1 << 31
_HEADER = struct.Struct("<4sHBBII")

SUMMARY_SCHEMA = f"classscore-summary@{__version__}"
TOPK_SCHEMA = f"classscore-topk@{__version__}"
MATRIX_SCHEMA = f"embedding-matrix@{__version__}"


@dataclass
class FeatureVector:
    values: np.ndarray  # (D,) float32
    schema_id: str

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])


@dataclass
class FeatureMatrix:
    values: np.ndarray  # (T, D) float32, row-major
    schema_id: str

    @property
    def frames(self) -> int:
        return int(self.values.shape[0])

    @property
    def dim(self) -> int:
        return int(self.values.shape[1])


FeatureData = Union[FeatureVector, FeatureMatrix]


# === FILE FORMAT ===
def encode_feature(data: FeatureData) -> bytes:
    values = np.ascontiguousarray(data.values, dtype="<f4")
    if isinstance(data, FeatureMatrix):
        if values.ndim != 2:
            raise FeatureFileError("matrix payload must be two-dimensional")
        kind, dim0, dim1 = KIND_MATRIX, values.shape[0], values.shape[1]
    else:
        if values.ndim != 1:
            raise FeatureFileError("vector payload must be one-dimensional")
        kind, dim0, dim1 = KIND_VECTOR, values.shape[0], 1
    if not np.all(np.isfinite(values)):
        raise FeatureFileError("feature payload contains non-finite values")

    schema = data.schema_id.encode("utf-8")
    if len(schema) > 0xFFFF:
        raise FeatureFileError("schema_id too long")
    return (_HEADER.pack(MAGIC, FORMAT_VERSION, kind, DTYPE_F32, dim0, dim1)
            + struct.pack("<H", len(schema)) + schema + values.tobytes())


def decode_feature(blob: bytes) -> FeatureData:
    if len(blob) < 4 or blob[:4] != MAGIC:
        raise BadMagicError("bad magic")
    if len(blob) < _HEADER.size + 2:
        raise TruncatedPayloadError("truncated header")

    _, version, kind, dtype, dim0, dim1 = _HEADER.unpack_from(blob, 0)
    if version != FORMAT_VERSION:
        raise FeatureFileError(f"unsupported format version {version}")
    if dtype != DTYPE_F32:
        raise FeatureFileError(f"unsupported dtype code {dtype}")
    if kind not in (KIND_VECTOR, KIND_MATRIX):
        raise FeatureFileError(f"unknown kind code {kind}")
    if dim0 == 0 or dim1 == 0 or dim0 * dim1 > MAX_ELEMENTS or (kind == KIND_VECTOR and dim1 != 1):
        raise DimensionOverflowError(f"dimension overflow: {dim0} x {dim1}")

    offset = _HEADER.size
    (schema_len,) = struct.unpack_from("<H", blob, offset)
    offset += 2
    if len(blob) < offset + schema_len:
        raise TruncatedPayloadError("truncated schema id")
    schema_id = blob[offset:offset + schema_len].decode("utf-8")
    offset += schema_len

    expected = dim0 * dim1 * 4
    payload = blob[offset:]
    if len(payload) < expected:
        raise TruncatedPayloadError(f"truncated payload: expected {expected} bytes, got {len(payload)}")
    if len(payload) > expected:
        raise FeatureFileError(f"trailing bytes after payload ({len(payload) - expected})")

    values = np.frombuffer(payload, dtype="<f4").astype(np.float32)
    if kind == KIND_MATRIX:
        return FeatureMatrix(values=values.reshape(dim0, dim1), schema_id=schema_id)
    return FeatureVector(values=values, schema_id=schema_id)


def write_feature_file(path: str, data: FeatureData) -> None:
    """Write a feature file atomically"""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    partial = target.with_name(target.name + ".part")
    partial.write_bytes(encode_feature(data))
    partial.replace(target)


def read_feature_file(path: str) -> FeatureData:
    try:
        blob = Path(path).read_bytes()
    except OSError as e:
        raise FeatureFileError(f"cannot read {path}: {e}")
    return decode_feature(blob)


# === CLASS-SCORE SUMMARIES ===
def class_score_summary(scores: FeatureMatrix) -> FeatureVector:
    """Per-class mean and population std across time, concatenated (2C)"""
    values = np.asarray(scores.values, dtype=np.float64)
    summary = np.concatenate([values.mean(axis=0), values.std(axis=0)])
    return FeatureVector(values=summary.astype(np.float32), schema_id=SUMMARY_SCHEMA)


def class_score_top_k_counts(scores: FeatureMatrix, k: int = None) -> FeatureVector:
    """Per-class count of frames where the class ranks in the top k"""
    k = k or settings.topk
    values = np.asarray(scores.values)
    n_classes = values.shape[1]
    if not 1 <= k <= n_classes:
        raise FeatureFileError(f"top-k of {k} needs 1 <= k <= {n_classes}")
    # stable sort on negated scores keeps the lower class index first on ties
    order = np.argsort(-values, axis=1, kind="stable")[:, :k]
    counts = np.bincount(order.ravel(), minlength=n_classes)
    return FeatureVector(values=counts.astype(np.float32), schema_id=TOPK_SCHEMA)


# === EPISODE MATRICES ===
def fit_frames(matrix: FeatureMatrix, frames: int, name: str = "") -> FeatureMatrix:
    """Truncate or zero-pad rows to a fixed frame count"""
    if matrix.frames == frames:
        return matrix
    if matrix.frames > frames:
        logger.warning("%s: truncating %d frames to %d", name or "matrix", matrix.frames, frames)
        return FeatureMatrix(values=matrix.values[:frames], schema_id=matrix.schema_id)
    logger.warning("%s: zero-padding %d frames to %d", name or "matrix", matrix.frames, frames)
    padded = np.zeros((frames, matrix.dim), dtype=np.float32)
    padded[:matrix.frames] = matrix.values
    return FeatureMatrix(values=padded, schema_id=matrix.schema_id)


def chunk_matrix(matrix: FeatureMatrix, hop_seconds: float, snippet_seconds: float = None,
                 min_tail_seconds: float = None) -> List[FeatureMatrix]:
    """Cut an episode-level matrix into snippet windows by frame start time"""
    seconds = snippet_seconds or settings.snippet_seconds
    min_tail = settings.min_tail_seconds if min_tail_seconds is None else min_tail_seconds
    starts = np.arange(matrix.frames) * hop_seconds
    duration = matrix.frames * hop_seconds
    n_full = int(np.floor(duration / seconds + 1e-9))
    remainder = duration - n_full * seconds

    n_snippets = n_full + (1 if remainder >= min_tail - 1e-9 else 0)
    chunks = []
    for index in range(n_snippets):
        rows = (starts >= index * seconds - 1e-9) & (starts < (index + 1) * seconds - 1e-9)
        if rows.any():
            chunks.append(FeatureMatrix(values=matrix.values[rows], schema_id=matrix.schema_id))
    return chunks
