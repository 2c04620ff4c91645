from pathlib import Path
from typing import Dict, Optional, Union

from pytorch_lightning import Callback

from rmpc.models.checkpoint import save_checkpoint
from rmpc.utils import get_pylogger

log = get_pylogger(__name__)

FINAL_NAME = "policy.rmpc"


class PolicyCheckpoint(Callback):
    """Writes RMPC1 checkpoints every `every` updates and when training ends."""

    def __init__(self, history, dirpath: Union[str, Path], every: int = 1000, metadata: Optional[Dict] = None):
        self.history = history
        self.dirpath = Path(dirpath)
        self.every = every
        self.metadata = dict(metadata or {})

    def _save(self, pl_module, name: str, iteration: int) -> Path:
        record = pl_module.last_record or {}
        meta = {**self.metadata, "iteration": iteration}
        if record.get("smoothed_J") is not None:
            meta["smoothed_J"] = record["smoothed_J"]
        path = save_checkpoint(pl_module.policy, self.dirpath / name, meta)
        self.history.checkpoints.append({"iteration": iteration, "path": str(path)})
        return path

    def on_train_batch_end(self, trainer, pl_module, outputs, batch, batch_idx):
        record = pl_module.last_record
        if record is not None and record["iteration"] % self.every == 0:
            self._save(pl_module, f"policy_{record['iteration']:07d}.rmpc", record["iteration"])

    def on_train_end(self, trainer, pl_module):
        self._save(pl_module, FINAL_NAME, int(trainer.global_step))

    def on_exception(self, trainer, pl_module, exception):
        # keep the last parameters of an aborted run
        self._save(pl_module, "aborted.rmpc", int(trainer.global_step))
