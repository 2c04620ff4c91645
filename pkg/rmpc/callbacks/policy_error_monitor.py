import json
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

from pytorch_lightning import Callback

from rmpc.errors import ReportRefusedError
from rmpc.rollout import MpcInstance
from rmpc.utils import get_pylogger

log = get_pylogger(__name__)

ERROR_FILE = "policy_error.jsonl"


class PolicyErrorMonitor(Callback):
    """Tracks the per-horizon policy error e_N on a held-out set during training.

    `evaluate(policy, instances)` returns {N: e_N}; it is called every `every`
    updates and the results are kept in the history and in `policy_error.jsonl`.
    """

    def __init__(self, history, evaluate: Callable, instances: Sequence[MpcInstance], every: int = 1000,
                 output_dir: Optional[Union[str, Path]] = None):
        self.history = history
        self.evaluate = evaluate
        self.instances = list(instances)
        self.every = every
        self.output_dir = Path(output_dir) if output_dir is not None else None

    def on_train_start(self, trainer, pl_module):
        if self.output_dir is not None:
            self.output_dir.mkdir(parents=True, exist_ok=True)
            Path(self.output_dir, ERROR_FILE).write_text("", encoding="utf-8")

    def on_train_batch_end(self, trainer, pl_module, outputs, batch, batch_idx):
        record = pl_module.last_record
        if record is None or record["iteration"] % self.every != 0:
            return
        try:
            table = {int(n): float(e) for n, e in self.evaluate(pl_module.policy, self.instances).items()}
        except ReportRefusedError as ex:
            log.warning(f"Policy error check skipped <iteration={record['iteration']}>: {ex}")
            return
        self.history.policy_error[record["iteration"]] = table
        worst = max(table.values(), default=float("nan"))
        log.info(f"Policy error check <iteration={record['iteration']}, max_e_N={worst:.4g}>")
        if self.output_dir is not None:
            with open(Path(self.output_dir, ERROR_FILE), "a", encoding="utf-8") as f:
                f.write(json.dumps({"iteration": record["iteration"],
                                    "e_N": {str(n): e for n, e in sorted(table.items())}}, sort_keys=True) + "\n")
