from typing import Optional

from pytorch_lightning import Callback

from rmpc.utils import get_pylogger

log = get_pylogger(__name__)


class ConvergenceMonitor(Callback):
    """Stops training once the smoothed objective changes by at most `epsilon`.

    Per-batch J is noisy, so the test runs on an exponential moving average with
    span `window` and only after `window` updates have been seen.
    """

    def __init__(self, epsilon: float = 1e-4, window: int = 100):
        self.epsilon = epsilon
        self.window = window
        self.alpha = 2.0 / (window + 1.0)
        self.smoothed: Optional[float] = None
        self.updates = 0
        self.converged = False

    def on_train_batch_end(self, trainer, pl_module, outputs, batch, batch_idx):
        record = pl_module.last_record
        if record is None:
            return
        previous = self.smoothed
        self.smoothed = record["J"] if previous is None else previous + self.alpha * (record["J"] - previous)
        self.updates += 1
        record["smoothed_J"] = self.smoothed
        if previous is not None and self.updates >= self.window and abs(self.smoothed - previous) <= self.epsilon:
            self.converged = True
            trainer.should_stop = True
            log.info(f"Converged <iteration={record['iteration']}, smoothed_J={self.smoothed:.6g}, "
                     f"epsilon={self.epsilon}>")
