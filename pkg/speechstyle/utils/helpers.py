# Common helper functions
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Tuple

import numpy as np

from ..exceptions import ConfigError


def read_key_value_file(path: str) -> List[Tuple[str, str]]:
    """Parse `key = value` lines; blank lines and `#` comments are skipped"""
    entries = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}")

    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{number}: expected 'key = value', got '{raw.strip()}'")
        key, value = line.split("=", 1)
        key, value = key.strip(), value.strip()
        if not key:
            raise ConfigError(f"{path}:{number}: empty key")
        entries.append((key, value))
    return entries


def split_list(value: str) -> List[str]:
    """Split a comma separated config value"""
    return [item.strip() for item in value.split(",") if item.strip()]


def read_jsonl(path: str) -> List[Dict]:
    """Read line-delimited JSON records"""
    rows = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def write_jsonl(rows: Iterable[Dict], path: str) -> None:
    """Write line-delimited JSON records with stable key order"""
    with open(path, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")


def read_json(path: str) -> Any:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_json(data: Any, path: str) -> None:
    """Write JSON deterministically"""
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def mean_and_std(values: List[float]) -> Tuple[float, float]:
    """Mean and population standard deviation"""
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.std())


def runs(mask: np.ndarray) -> List[Tuple[int, int]]:
    """Half-open [start, stop) index runs where mask is True"""
    padded = np.concatenate(([False], np.asarray(mask, dtype=bool), [False]))
    edges = np.flatnonzero(np.diff(padded.astype(np.int8)))
    return [(int(a), int(b)) for a, b in zip(edges[::2], edges[1::2])]


def ensure_dir(path: str) -> Path:
    directory = Path(path)
    directory.mkdir(parents=True, exist_ok=True)
    return directory
