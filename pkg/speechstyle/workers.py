# Pool tasks for extraction, training and fold prediction (joblib)
import logging
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
from joblib import Parallel, delayed

from .exceptions import SpeechStyleError
from .schemas import EpisodeRecord, FoldAssignment, PredictionRecord, TrainConfig
from .services import corpus, evaluation, features, model
from .utils.helpers import write_jsonl

logger = logging.getLogger(__name__)


def run_parallel(task, arguments: List[tuple], jobs: int = 1) -> List[Dict]:
    """Fan tasks out over a process pool; jobs=1 stays in-process"""
    if jobs == 1:
        return [task(*args) for args in arguments]
    return Parallel(n_jobs=jobs)(delayed(task)(*args) for args in arguments)


def checkpoint_path(out_dir: str, fold: int) -> Path:
    return Path(out_dir) / f"fold{fold}.ssc"


def fold_seed(seed: int, fold: int) -> int:
    return int(np.random.SeedSequence([seed, fold]).generate_state(1)[0])


# === EXTRACTION TASKS ===
def extract_episode_task(record: EpisodeRecord, features_dir: str, kind: str, force: bool = False,
                         seed: int = 0) -> Dict:
    """Extract one episode; failures are reported, never raised"""
    try:
        written = features.extract_episode(record, features_dir, kind, force, seed)
        return {"status": "completed", "episode_id": record.episode_id, "written": written}
    except (SpeechStyleError, OSError, ValueError) as e:
        logger.error("%s: extraction failed: %s", record.episode_id, e)
        return {"status": "failed", "episode_id": record.episode_id, "error": str(e)}


# === TRAINING TASKS ===
def train_fold_task(fold: int, records: List[EpisodeRecord], folds: FoldAssignment, features_dir: str,
                    kind: str, out_dir: str, seed: int, inner_val: bool = False,
                    max_epochs: Optional[int] = None) -> Dict:
    """Train the fold model on every other fold and save its checkpoint"""
    try:
        held_out = set(folds.members(fold))
        train_records = [r for r in records if r.episode_id not in held_out]
        if inner_val:
            train_records, val_records = corpus.carve_validation(train_records, seed=seed)
        else:
            val_records = [r for r in records if r.episode_id in held_out]

        train_set = features.build_dataset(train_records, features_dir, kind)
        val_set = features.build_dataset(val_records, features_dir, kind)
        standardizer, train_set, (val_set,) = features.standardize_split(train_set, [val_set], kind)

        arch = features.head_for(kind, train_set.x.shape[1])
        epochs = max_epochs or (model.MATRIX_HEAD_EPOCHS if arch.variant == "matrix-head" else 40)
        config = TrainConfig(seed=fold_seed(seed, fold), max_epochs=epochs,
                             class_counts=corpus.class_counts(train_records))
        result = model.train(train_set.x, train_set.y, val_set.x, val_set.y, arch, config,
                             schema_id=train_set.schema_id, standardizer=standardizer)

        model.save_checkpoint(result.checkpoint, str(checkpoint_path(out_dir, fold)))
        write_jsonl([{"fold": fold, **entry.model_dump()} for entry in result.log],
                    str(Path(out_dir) / f"train.fold{fold}.log.jsonl"))
        return {"status": "completed", "fold": fold, "epoch": result.checkpoint.header.epoch,
                "val_loss": result.checkpoint.header.val_loss, "train_snippets": len(train_set.y)}
    except SpeechStyleError as e:
        logger.error("fold %d: training failed: %s", fold, e.detail)
        return {"status": "failed", "fold": fold, "error": e.detail}


# === PREDICTION TASKS ===
def score_episode(checkpoint: model.Checkpoint, episode: features.EpisodeFeatures,
                  aggregation: str = "median") -> tuple:
    """All snippet scores of an episode and their aggregate"""
    scores = model.score(checkpoint, episode.values, episode.schema_id)
    return scores.astype(np.float64).tolist(), evaluation.aggregate(scores, aggregation)


def predict_fold_task(fold: int, records: List[EpisodeRecord], checkpoint_file: str, features_dir: str,
                      kind: str, aggregation: str = "median") -> Dict:
    """Score every chunk of each held-out episode with the fold model"""
    try:
        checkpoint = model.load_checkpoint(checkpoint_file)
        predictions = []
        for record in records:
            episode = features.load_episode(features_dir, kind, record.episode_id)
            snippet_scores, episode_score = score_episode(checkpoint, episode, aggregation)
            predictions.append(PredictionRecord(
                episode_id=record.episode_id, snippet_scores=snippet_scores, episode_score=episode_score,
                fold=fold, label=record.label, language=record.language, format=record.format,
                category=record.category))
        return {"status": "completed", "fold": fold, "predictions": predictions}
    except SpeechStyleError as e:
        logger.error("fold %d: prediction failed: %s", fold, e.detail)
        return {"status": "failed", "fold": fold, "error": e.detail}
