"""Append-only on-disk store of oracle solutions.

One JSON record per line in `oracle_cache.jsonl`:

    {"key": <sha256 hex>, "solution": {...}}

The key hashes the model and utility descriptions, the instance and the solver
options, so any change in one of them misses the cache. The index is rebuilt by
scanning the file when the cache is opened.
"""
import hashlib
import json
import threading
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np

from rmpc.dynamics import SystemModel
from rmpc.rollout import UtilityFunction
from rmpc.utils import get_pylogger

from .solution import OracleSolution

log = get_pylogger(__name__)

CACHE_FILE = "oracle_cache.jsonl"


def cache_key(model: SystemModel, utility: UtilityFunction, x0, r, horizon: int, solver: Dict) -> str:
    content = {
        "model": model.describe(),
        "utility": utility.describe(),
        "x0": np.asarray(x0, dtype=np.float64).tolist(),
        "r": np.asarray(r, dtype=np.float64)[:horizon].tolist(),
        "N": int(horizon),
        "solver": solver,
    }
    return hashlib.sha256(json.dumps(content, sort_keys=True).encode("utf-8")).hexdigest()


class OracleCache:
    def __init__(self, directory: Union[str, Path]):
        self.path = Path(directory, CACHE_FILE)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._index: Dict[str, Dict] = {}
        self.hits = 0
        self.misses = 0
        if self.path.is_file():
            self._load()

    def _load(self) -> None:
        with open(self.path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                    self._index[record["key"]] = record["solution"]
                except (ValueError, KeyError):
                    log.warning(f"Skipping unreadable cache record <{self.path}:{lineno}>")
        log.info(f"Loaded oracle cache <path={self.path}, records={len(self._index)}>")

    def __len__(self) -> int:
        return len(self._index)

    def __contains__(self, key: str) -> bool:
        return key in self._index

    def get(self, key: str) -> Optional[OracleSolution]:
        with self._lock:
            record = self._index.get(key)
            if record is None:
                self.misses += 1
                return None
            self.hits += 1
        return OracleSolution.from_dict(record)

    def put(self, key: str, solution: OracleSolution) -> None:
        record = solution.to_dict()
        with self._lock:
            if key in self._index:
                return
            self._index[key] = record
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(json.dumps({"key": key, "solution": record}, sort_keys=True) + "\n")

    def records(self):
        with self._lock:
            return [(key, OracleSolution.from_dict(rec)) for key, rec in self._index.items()]
