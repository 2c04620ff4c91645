import json
import time
from pathlib import Path
from typing import Optional, Union

from pytorch_lightning import Callback

from rmpc.utils import get_pylogger

log = get_pylogger(__name__)

HISTORY_FILE = "history.jsonl"
TIMING_FILE = "timing.jsonl"
HISTORY_FIELDS = ("iteration", "J", "smoothed_J", "grad_norm", "clip_active", "excluded")


class HistoryWriter(Callback):
    """Appends one JSON line per update to `history.jsonl`.

    Wall-clock times go to `timing.jsonl`, keeping the history itself reproducible.
    """

    def __init__(self, history, output_dir: Optional[Union[str, Path]] = None):
        self.history = history
        self.output_dir = Path(output_dir) if output_dir is not None else None
        self._started = None

    def on_train_start(self, trainer, pl_module):
        self._started = time.perf_counter()
        if self.output_dir is not None:
            self.output_dir.mkdir(parents=True, exist_ok=True)
            for name in (HISTORY_FILE, TIMING_FILE):
                Path(self.output_dir, name).write_text("", encoding="utf-8")

    def on_train_batch_end(self, trainer, pl_module, outputs, batch, batch_idx):
        record = pl_module.last_record
        if record is None:
            return
        wall_ms = (time.perf_counter() - self._started) * 1e3
        entry = {key: record.get(key) for key in HISTORY_FIELDS}
        self.history.append(entry, wall_ms)
        if self.output_dir is None:
            return
        with open(Path(self.output_dir, HISTORY_FILE), "a", encoding="utf-8") as f:
            f.write(json.dumps(entry, sort_keys=True) + "\n")
        with open(Path(self.output_dir, TIMING_FILE), "a", encoding="utf-8") as f:
            f.write(json.dumps({"iteration": record["iteration"], "wall_ms": round(wall_ms, 3)}) + "\n")
