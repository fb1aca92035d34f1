# Corpus manifests, label mapping, language grouping and fold splitting
import csv
import json
import logging
import random
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from pydantic import ValidationError

from ..exceptions import ConfigError, ManifestError
from ..schemas import EpisodeRecord, FoldAssignment, Label, LabelMapping, LanguageGroup, MappedLabel
from ..utils.helpers import read_key_value_file, split_list
from ..utils.validators import language_aliases, normalize_language

logger = logging.getLogger(__name__)

DEFAULT_LABELS: Dict[str, str] = {
    "scripted narrative": "scripted",
    "scripted non-fiction": "scripted",
    "blabbercast": "spontaneous",
    "discussion": "spontaneous",
    "improv": "spontaneous",
    "call-ins": "spontaneous",
    "interview": "ambiguous",
    "soundscape": "ambiguous",
}

DEFAULT_LANGUAGE_RULES: Dict[str, str] = {
    "bengali": "indo-aryan",
    "hindi": "indo-aryan",
    "telugu": "dravidian",
    "tamil": "dravidian",
    "filipino/tagalog": "malayo-polynesian",
    "indonesian": "malayo-polynesian",
}

DEFAULT_EXCLUSIONS = {"catalan"}

EXCLUDE_KEY = "exclude"


@dataclass
class ManifestSummary:
    records: List[EpisodeRecord]
    total_rows: int
    dropped_ambiguous: int = 0
    row_errors: List[Dict] = field(default_factory=list)


# === LABEL MAPPING ===
def default_label_mapping() -> LabelMapping:
    return LabelMapping(entries={k: MappedLabel(v) for k, v in DEFAULT_LABELS.items()})


def load_label_mapping(path: Optional[str]) -> LabelMapping:
    """Read `format = scripted|spontaneous|ambiguous` lines"""
    if path is None:
        return default_label_mapping()

    entries: Dict[str, MappedLabel] = {}
    for key, value in read_key_value_file(path):
        name = key.strip().casefold()
        if name in entries:
            raise ConfigError(f"{path}: format '{key}' mapped more than once")
        try:
            entries[name] = MappedLabel(value.strip().lower())
        except ValueError:
            raise ConfigError(f"{path}: '{key}' maps to unknown label '{value}'")
    return LabelMapping(entries=entries)


# === LANGUAGE GROUPING ===
def default_language_groups() -> LanguageGroup:
    return build_language_groups(DEFAULT_LANGUAGE_RULES, DEFAULT_EXCLUSIONS)


def build_language_groups(rules: Dict[str, str], exclusions) -> LanguageGroup:
    """Expand 'a/b' aliases so either spelling matches"""
    expanded: Dict[str, str] = {}
    for language, group in rules.items():
        for alias in language_aliases(language):
            expanded[alias] = normalize_language(group)
    excluded = set()
    for language in exclusions:
        excluded.update(language_aliases(language))
    return LanguageGroup(rules=expanded, exclusions=excluded)


def load_language_groups(path: Optional[str]) -> LanguageGroup:
    """Read `language = group` lines plus an optional `exclude = a, b` line"""
    if path is None:
        return default_language_groups()

    rules: Dict[str, str] = {}
    exclusions: List[str] = []
    for key, value in read_key_value_file(path):
        if key.strip().lower() == EXCLUDE_KEY:
            exclusions.extend(split_list(value))
        else:
            rules[key] = value
    return build_language_groups(rules, exclusions)


def group_language(language: str, rules: LanguageGroup) -> Optional[str]:
    """Group name for a language, or None when it is excluded"""
    aliases = language_aliases(language)
    if any(alias in rules.exclusions for alias in aliases):
        return None
    for alias in aliases:
        if alias in rules.rules:
            return rules.rules[alias]
    return normalize_language(language)


# === MANIFEST LOADING ===
def _read_rows(path: Path) -> List[Dict]:
    if path.suffix.lower() in (".jsonl", ".ndjson", ".json"):
        rows = []
        with open(path, "r", encoding="utf-8") as f:
            for number, line in enumerate(f, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    row = json.loads(line)
                except json.JSONDecodeError as e:
                    raise ManifestError(f"{path}:{number}: invalid JSON record ({e})")
                if not isinstance(row, dict):
                    raise ManifestError(f"{path}:{number}: record is not an object")
                rows.append({k: "" if v is None else str(v) for k, v in row.items()})
        return rows

    delimiter = "\t" if path.suffix.lower() == ".tsv" else ","
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f, delimiter=delimiter)
        if reader.fieldnames is None:
            raise ManifestError(f"{path}: missing header row")
        return [{k.strip(): (v or "").strip() for k, v in row.items() if k} for row in reader]


def _resolve_path(value: str, base: Path) -> Optional[str]:
    if not value:
        return None
    candidate = Path(value)
    if not candidate.is_absolute():
        candidate = base / candidate
    return str(candidate)


def read_manifest(path: str, mapping: LabelMapping) -> ManifestSummary:
    """Load a manifest keeping count of dropped and failed rows"""
    manifest_path = Path(path)
    if not manifest_path.is_file():
        raise ManifestError(f"manifest not found: {path}")

    rows = _read_rows(manifest_path)
    seen = set()
    for row in rows:
        episode_id = row.get("episode_id", "").strip()
        if episode_id and episode_id in seen:
            raise ManifestError(f"{path}: duplicate episode_id '{episode_id}'")
        seen.add(episode_id)

    summary = ManifestSummary(records=[], total_rows=len(rows))
    base = manifest_path.parent
    for number, row in enumerate(rows, start=1):
        episode_id = row.get("episode_id", "").strip()
        language = row.get("language", "").strip()
        format_name = row.get("format", "").strip()
        direct = row.get("label", "").strip().lower()

        if not episode_id or not language:
            summary.row_errors.append({"row": number, "episode_id": episode_id,
                                       "error": "missing episode_id or language"})
            continue

        if direct:
            try:
                resolved = MappedLabel(direct)
            except ValueError:
                summary.row_errors.append({"row": number, "episode_id": episode_id,
                                           "error": f"unknown label '{direct}'"})
                continue
        elif format_name:
            resolved = mapping.resolve(format_name)
            if resolved is None:
                summary.row_errors.append({"row": number, "episode_id": episode_id,
                                           "error": f"unknown format '{format_name}'"})
                continue
        else:
            summary.row_errors.append({"row": number, "episode_id": episode_id,
                                       "error": "neither label nor format given"})
            continue

        if resolved is MappedLabel.ambiguous:
            summary.dropped_ambiguous += 1
            continue

        try:
            record = EpisodeRecord(
                episode_id=episode_id,
                audio_path=_resolve_path(row.get("audio_path", "").strip(), base),
                feature_path=_resolve_path(row.get("feature_path", "").strip(), base),
                label=Label(resolved.value),
                language=normalize_language(language),
                category=row.get("category", "").strip(),
                format=format_name,
            )
        except ValidationError as e:
            summary.row_errors.append({"row": number, "episode_id": episode_id, "error": str(e)})
            continue
        summary.records.append(record)

    if summary.dropped_ambiguous:
        logger.info("%s: dropped %d ambiguous rows", path, summary.dropped_ambiguous)
    for error in summary.row_errors:
        logger.warning("%s row %d (%s): %s", path, error["row"], error["episode_id"] or "?", error["error"])
    return summary


def load_manifest(path: str, mapping: Optional[LabelMapping] = None) -> List[EpisodeRecord]:
    """Load manifest records with resolved binary labels"""
    return read_manifest(path, mapping or default_label_mapping()).records


def write_manifest(records: List[EpisodeRecord], path: str) -> None:
    """Write records as a tabular manifest"""
    columns = ["episode_id", "audio_path", "feature_path", "label", "language", "category", "format"]
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=columns)
        writer.writeheader()
        for record in records:
            row = record.model_dump()
            row["label"] = record.label.value
            writer.writerow({c: row.get(c) or "" for c in columns})


def class_counts(records: List[EpisodeRecord]) -> Tuple[int, int]:
    """(n_scripted, n_spontaneous)"""
    scripted = sum(1 for r in records if r.label is Label.scripted)
    return scripted, len(records) - scripted


# === FOLD SPLITTING ===
def stratified_kfold(records: List[EpisodeRecord], k: int = 5, seed: int = 0) -> FoldAssignment:
    """Episode-level folds stratified by category x format x language"""
    if k < 2:
        raise ConfigError(f"fold count must be at least 2, got {k}")
    if not records:
        raise ManifestError("cannot split an empty manifest")
    if k > len(records):
        raise ConfigError(f"fold count {k} exceeds the number of episodes ({len(records)})")

    strata: Dict[Tuple[str, str, str], List[str]] = defaultdict(list)
    for record in records:
        strata[record.stratum].append(record.episode_id)

    rng = random.Random(seed)
    sizes = [0] * k
    assignment: Dict[str, int] = {}
    for key in sorted(strata):
        members = sorted(strata[key])
        rng.shuffle(members)
        # start the round-robin at the currently smallest folds
        order = sorted(range(k), key=lambda fold: (sizes[fold], fold))
        for i, episode_id in enumerate(members):
            fold = order[i % k]
            assignment[episode_id] = fold
            sizes[fold] += 1

    return FoldAssignment(k=k, seed=seed, assignment=assignment)


def carve_validation(records: List[EpisodeRecord], fraction: float = 0.1,
                     seed: int = 0) -> Tuple[List[EpisodeRecord], List[EpisodeRecord]]:
    """Split training episodes into (train, inner validation), per class"""
    rng = random.Random(seed)
    train, val = [], []
    for label in (Label.scripted, Label.spontaneous):
        members = sorted((r for r in records if r.label is label), key=lambda r: r.episode_id)
        rng.shuffle(members)
        n_val = max(1, int(round(len(members) * fraction))) if len(members) > 1 else 0
        val.extend(members[:n_val])
        train.extend(members[n_val:])
    if not train or not val:
        raise ConfigError("not enough episodes to carve an inner validation split")
    return train, val


def read_folds(path: str) -> FoldAssignment:
    """Read a fold assignment written by write_folds"""
    with open(path, "r", encoding="utf-8") as f:
        return FoldAssignment.model_validate_json(f.read())


def write_folds(folds: FoldAssignment, path: str) -> None:
    Path(path).write_text(folds.model_dump_json(indent=2) + "\n", encoding="utf-8")
