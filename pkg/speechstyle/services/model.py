# Classifier heads, training loop and checkpoint files
import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.special import expit

from .. import __version__
from ..exceptions import MetricError, SchemaMismatchError, TrainingError
from ..schemas import CheckpointHeader, EpochLog, HeadArchitecture, TrainConfig
from ..utils.validators import is_binary_labels, is_finite
from .evaluation import roc_auc
from .handcrafted import Standardizer

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"SSC1"
CHECKPOINT_VERSION = 1
LOSS_CLAMP = 1e-7
MATRIX_HEAD_EPOCHS = 10

Params = Dict[str, np.ndarray]


@dataclass
class AdamState:
    m: Params
    v: Params
    step: int = 0


@dataclass
class Checkpoint:
    header: CheckpointHeader
    params: Params
    standardizer: Optional[Standardizer] = None

    @property
    def arch(self) -> HeadArchitecture:
        return self.header.arch


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    log: List[EpochLog] = field(default_factory=list)


# === PARAMETERS ===
def param_names(arch: HeadArchitecture) -> List[str]:
    names = ["W1", "b1", "W2", "b2"]
    if arch.variant == "matrix-head":
        names = ["W0", "b0"] + names
    return names


def param_shapes(arch: HeadArchitecture) -> Dict[str, Tuple[int, ...]]:
    hidden_in = arch.projection if arch.variant == "matrix-head" else arch.input_dim
    shapes = {
        "W1": (hidden_in, arch.hidden),
        "b1": (arch.hidden,),
        "W2": (arch.hidden, 1),
        "b2": (1,),
    }
    if arch.variant == "matrix-head":
        shapes["W0"] = (arch.input_dim, arch.projection)
        shapes["b0"] = (arch.projection,)
    return {name: shapes[name] for name in param_names(arch)}


def output_bias(class_counts: Tuple[int, int]) -> float:
    """ln(n_scripted / n_spontaneous), so the initial score is the scripted prevalence"""
    n_scripted, n_spontaneous = class_counts
    if n_scripted <= 0 or n_spontaneous <= 0:
        raise TrainingError(f"both classes need examples to set the output bias, got {class_counts}")
    return float(np.log(n_scripted / n_spontaneous))


def init_params(arch: HeadArchitecture, seed: int, class_counts: Tuple[int, int],
                dtype=np.float32) -> Params:
    """Seeded Glorot-uniform weights, zero hidden biases, prior output bias"""
    bias = output_bias(class_counts)
    shapes = param_shapes(arch)
    weights = [name for name in shapes if name.startswith("W")]
    streams = np.random.SeedSequence(seed).spawn(len(weights))

    params: Params = {}
    for name, stream in zip(weights, streams):
        fan_in, fan_out = shapes[name]
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        params[name] = np.random.default_rng(stream).uniform(-limit, limit, size=shapes[name]).astype(dtype)
    for name in shapes:
        if name.startswith("b"):
            params[name] = np.zeros(shapes[name], dtype=dtype)
    params["b2"][0] = bias
    return {name: params[name] for name in shapes}


def pool_frames(matrix: np.ndarray, frames: Optional[int] = None) -> np.ndarray:
    """Time-average over (..., T, D) input; zero-padded rows count towards T"""
    matrix = np.asarray(matrix)
    frames = frames or matrix.shape[-2]
    return matrix.sum(axis=-2) / frames


# === FORWARD / BACKWARD ===
def forward(params: Params, inputs: np.ndarray, arch: HeadArchitecture, mode: str = "infer",
            rng: Optional[np.random.Generator] = None) -> Tuple[np.ndarray, Dict]:
    """
    Scores in (0, 1) for a batch.

    Vector head takes (N, D). Matrix head takes (N, T, D) or input already
    reduced by pool_frames to (N, D): Dense(100) is linear, so pooling before
    the projection gives the same result as pooling its per-frame outputs.
    Frame input is fitted to arch.frames the way feature loading fits it.
    """
    x = np.asarray(inputs)
    if not is_finite(x):
        raise TrainingError("non-finite values in model input")

    cache: Dict[str, np.ndarray] = {}
    if arch.variant == "matrix-head":
        if x.ndim == 3:
            # frames past the fixed length are dropped; short inputs count as zero-padded
            x = pool_frames(x[:, :arch.frames], arch.frames)
        cache["pooled"] = x
        h = x @ params["W0"] + params["b0"]
    else:
        h = x
    if h.ndim != 2 or h.shape[1] != params["W1"].shape[0]:
        raise TrainingError(f"input of shape {np.shape(inputs)} does not fit {arch.variant} "
                            f"with input_dim {arch.input_dim}")
    cache["h"] = h

    z1 = h @ params["W1"] + params["b1"]
    a1 = np.maximum(z1, 0)
    if mode == "train" and arch.dropout > 0:
        if rng is None:
            raise TrainingError("train mode needs a dropout generator")
        keep = 1.0 - arch.dropout
        mask = (rng.random(a1.shape) < keep).astype(a1.dtype) / a1.dtype.type(keep)
        a1 = a1 * mask
        cache["mask"] = mask
    cache["z1"] = z1
    cache["a1"] = a1

    z2 = a1 @ params["W2"] + params["b2"]
    scores = expit(z2[:, 0])
    cache["scores"] = scores
    return scores, cache


def bce_loss(scores: np.ndarray, labels: np.ndarray) -> float:
    """Mean binary cross-entropy with scores clamped away from 0 and 1"""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if np.isnan(scores).any() or np.isnan(labels).any():
        raise TrainingError("NaN in loss inputs")
    p = np.clip(scores, LOSS_CLAMP, 1.0 - LOSS_CLAMP)
    return float(np.mean(-(labels * np.log(p) + (1.0 - labels) * np.log1p(-p))))


def backward(params: Params, cache: Dict, labels: np.ndarray, arch: HeadArchitecture) -> Params:
    """Gradients of the mean batch BCE with respect to every parameter"""
    scores = cache["scores"]
    labels = np.asarray(labels, dtype=scores.dtype)
    n = scores.shape[0]

    dz2 = ((scores - labels) / n)[:, None]
    grads: Params = {
        "W2": cache["a1"].T @ dz2,
        "b2": dz2.sum(axis=0),
    }
    da1 = dz2 @ params["W2"].T
    if "mask" in cache:
        da1 = da1 * cache["mask"]
    dz1 = da1 * (cache["z1"] > 0)
    grads["W1"] = cache["h"].T @ dz1
    grads["b1"] = dz1.sum(axis=0)

    if arch.variant == "matrix-head":
        dh = dz1 @ params["W1"].T
        grads["W0"] = cache["pooled"].T @ dh
        grads["b0"] = dh.sum(axis=0)
    return {name: grads[name].astype(params[name].dtype, copy=False) for name in params}


def check_gradients(params: Params, inputs: np.ndarray, labels: np.ndarray, arch: HeadArchitecture,
                    h: float = 1e-4, seed: int = 0, mode: str = "train") -> float:
    """Max relative error of analytic gradients against central differences, in float64"""
    shadow = {name: value.astype(np.float64) for name, value in params.items()}
    x = np.asarray(inputs, dtype=np.float64)

    def loss_at(p: Params) -> float:
        scores, _ = forward(p, x, arch, mode, np.random.default_rng(seed))
        return bce_loss(scores, labels)

    _, cache = forward(shadow, x, arch, mode, np.random.default_rng(seed))
    analytic = backward(shadow, cache, labels, arch)

    worst = 0.0
    for name, value in shadow.items():
        for index in np.ndindex(value.shape):
            original = value[index]
            value[index] = original + h
            up = loss_at(shadow)
            value[index] = original - h
            down = loss_at(shadow)
            value[index] = original
            numeric = (up - down) / (2 * h)
            exact = analytic[name][index]
            error = abs(exact - numeric) / max(abs(exact) + abs(numeric), 1e-3)
            worst = max(worst, error)
    return worst


# === OPTIMIZER ===
def adam_init(params: Params) -> AdamState:
    return AdamState(m={k: np.zeros_like(v) for k, v in params.items()},
                     v={k: np.zeros_like(v) for k, v in params.items()})


def adam_step(params: Params, grads: Params, state: AdamState, config: TrainConfig) -> Params:
    """Bias-corrected Adam update; updates state in place and returns the new parameters"""
    state.step += 1
    b1, b2 = config.beta1, config.beta2
    correction1 = 1.0 - b1 ** state.step
    correction2 = 1.0 - b2 ** state.step
    updated: Params = {}
    for name, value in params.items():
        g = grads[name]
        if g.shape != value.shape:
            raise TrainingError(f"gradient for {name} has shape {g.shape}, expected {value.shape}")
        state.m[name] = b1 * state.m[name] + (1 - b1) * g
        state.v[name] = b2 * state.v[name] + (1 - b2) * g * g
        m_hat = state.m[name] / correction1
        v_hat = state.v[name] / correction2
        step = config.learning_rate * m_hat / (np.sqrt(v_hat) + config.adam_epsilon)
        updated[name] = (value - step).astype(value.dtype, copy=False)
    return updated


# === TRAINING ===
def predict_scores(params: Params, inputs: np.ndarray, arch: HeadArchitecture,
                   batch_size: int = 256) -> np.ndarray:
    """Deterministic inference over any number of examples"""
    chunks = [forward(params, inputs[i:i + batch_size], arch, "infer")[0]
              for i in range(0, len(inputs), batch_size)]
    return np.concatenate(chunks) if chunks else np.zeros(0)


def _accuracy(scores: np.ndarray, labels: np.ndarray) -> float:
    return float(np.mean((scores >= 0.5) == (labels >= 0.5)))


def train(train_x: np.ndarray, train_y: np.ndarray, val_x: np.ndarray, val_y: np.ndarray,
          arch: HeadArchitecture, config: TrainConfig, schema_id: str = "",
          standardizer: Optional[Standardizer] = None) -> TrainResult:
    """Mini-batch Adam training keeping the epoch with the lowest validation loss"""
    if len(train_x) == 0 or len(val_x) == 0:
        raise TrainingError("training and validation sets must be non-empty")
    if len(train_x) != len(train_y) or len(val_x) != len(val_y):
        raise TrainingError("inputs and labels differ in length")
    if not (is_binary_labels(train_y) and is_binary_labels(val_y)):
        raise TrainingError("labels must be 0 or 1")
    # the training config owns the dropout rate
    arch = arch.model_copy(update={"dropout": config.dropout})

    train_x = np.asarray(train_x, dtype=np.float32)
    val_x = np.asarray(val_x, dtype=np.float32)
    train_y = np.asarray(train_y, dtype=np.float32)
    val_y = np.asarray(val_y, dtype=np.float32)

    init_seed, shuffle_seed, dropout_seed = np.random.SeedSequence(config.seed).spawn(3)
    params = init_params(arch, int(init_seed.generate_state(1)[0]), config.class_counts)
    shuffle_rng = np.random.default_rng(shuffle_seed)
    dropout_rng = np.random.default_rng(dropout_seed)
    state = adam_init(params)

    log: List[EpochLog] = []
    best_params, best_epoch, best_loss = None, -1, np.inf
    n = len(train_x)
    for epoch in range(config.max_epochs):
        order = shuffle_rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            batch = order[start:start + config.batch_size]
            scores, cache = forward(params, train_x[batch], arch, "train", dropout_rng)
            total += bce_loss(scores, train_y[batch]) * len(batch)
            params = adam_step(params, backward(params, cache, train_y[batch], arch), state, config)

        val_scores = predict_scores(params, val_x, arch)
        val_loss = bce_loss(val_scores, val_y)
        try:
            val_auc = roc_auc(val_y.astype(int), val_scores)
        except MetricError:
            val_auc = None
        entry = EpochLog(epoch=epoch, train_loss=total / n, val_loss=val_loss,
                         val_accuracy=_accuracy(val_scores, val_y), val_auc=val_auc)
        log.append(entry)
        logger.debug("epoch %d train_loss=%.4f val_loss=%.4f", epoch, entry.train_loss, val_loss)

        # strict comparison keeps the earlier epoch on ties
        if val_loss < best_loss:
            best_params = {k: v.copy() for k, v in params.items()}
            best_epoch, best_loss = epoch, val_loss

    for name, value in best_params.items():
        if not is_finite(value):
            raise TrainingError(f"parameter {name} diverged")

    header = CheckpointHeader(
        format_version=CHECKPOINT_VERSION,
        tool_version=__version__,
        schema_id=schema_id,
        arch=arch,
        config=config,
        seed=config.seed,
        epoch=best_epoch,
        val_loss=best_loss,
        parameters=[(name, list(value.shape)) for name, value in best_params.items()],
        standardizer_dim=0 if standardizer is None else int(standardizer.mean.shape[0]),
    )
    logger.info("best epoch %d of %d (val_loss=%.4f)", best_epoch, config.max_epochs, best_loss)
    return TrainResult(checkpoint=Checkpoint(header, best_params, standardizer), log=log)


# === INFERENCE ===
def check_schema(checkpoint: Checkpoint, schema_id: str) -> None:
    if checkpoint.header.schema_id and schema_id != checkpoint.header.schema_id:
        raise SchemaMismatchError(checkpoint.header.schema_id, schema_id)


def score(checkpoint: Checkpoint, inputs: np.ndarray, schema_id: Optional[str] = None) -> np.ndarray:
    """Standardize if needed, then score with dropout disabled"""
    if schema_id is not None:
        check_schema(checkpoint, schema_id)
    x = np.asarray(inputs, dtype=np.float64)
    if checkpoint.standardizer is not None:
        x = checkpoint.standardizer.apply(x)
    return predict_scores(checkpoint.params, x.astype(np.float32), checkpoint.arch)


# === CHECKPOINT FILES ===
def encode_checkpoint(checkpoint: Checkpoint) -> bytes:
    header = checkpoint.header.model_dump_json().encode("utf-8")
    parts = [CHECKPOINT_MAGIC, struct.pack("<I", len(header)), header]
    for name, _ in checkpoint.header.parameters:
        parts.append(np.ascontiguousarray(checkpoint.params[name], dtype="<f4").tobytes())
    if checkpoint.standardizer is not None:
        parts.append(np.ascontiguousarray(checkpoint.standardizer.mean, dtype="<f4").tobytes())
        parts.append(np.ascontiguousarray(checkpoint.standardizer.std, dtype="<f4").tobytes())
    return b"".join(parts)


def decode_checkpoint(blob: bytes) -> Checkpoint:
    if blob[:4] != CHECKPOINT_MAGIC:
        raise TrainingError("not a checkpoint file (bad magic)")
    if len(blob) < 8:
        raise TrainingError("truncated checkpoint header")
    (length,) = struct.unpack_from("<I", blob, 4)
    offset = 8 + length
    if len(blob) < offset:
        raise TrainingError("truncated checkpoint header")
    header = CheckpointHeader.model_validate(json.loads(blob[8:offset].decode("utf-8")))
    if header.format_version != CHECKPOINT_VERSION:
        raise TrainingError(f"unsupported checkpoint version {header.format_version}")

    expected_shapes = param_shapes(header.arch)

    def take(count: int) -> np.ndarray:
        nonlocal offset
        end = offset + 4 * count
        if len(blob) < end:
            raise TrainingError("truncated checkpoint payload")
        values = np.frombuffer(blob[offset:end], dtype="<f4").astype(np.float32)
        offset = end
        return values

    params: Params = {}
    for name, shape in header.parameters:
        if tuple(shape) != expected_shapes.get(name):
            raise TrainingError(f"parameter {name} has shape {shape}, expected {expected_shapes.get(name)}")
        params[name] = take(int(np.prod(shape))).reshape(shape)
        if not is_finite(params[name]):
            raise TrainingError(f"parameter {name} is not finite")

    standardizer = None
    if header.standardizer_dim:
        mean = take(header.standardizer_dim).astype(np.float64)
        std = take(header.standardizer_dim).astype(np.float64)
        standardizer = Standardizer(mean=mean, std=std)
    if offset != len(blob):
        raise TrainingError("trailing bytes after checkpoint payload")
    return Checkpoint(header, params, standardizer)


def save_checkpoint(checkpoint: Checkpoint, path: str) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    partial = target.with_name(target.name + ".part")
    partial.write_bytes(encode_checkpoint(checkpoint))
    partial.replace(target)


def load_checkpoint(path: str) -> Checkpoint:
    try:
        blob = Path(path).read_bytes()
    except OSError as e:
        raise TrainingError(f"cannot read checkpoint {path}: {e}")
    return decode_checkpoint(blob)
