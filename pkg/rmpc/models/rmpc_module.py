from typing import Any, Dict, Optional

import torch
from pytorch_lightning import LightningModule

from rmpc.dynamics import SystemModel
from rmpc.errors import BatchFailureError, TrainingAbortedError
from rmpc.rollout import UtilityFunction, objective_tensor
from rmpc.utils import get_pylogger

from .components.recurrent_policy import RecurrentPolicy
from .optim import build_optimizer

log = get_pylogger(__name__)


class RmpcLitModule(LightningModule):
    """LightningModule minimizing the N_max-step MPC cost of a recurrent policy.

    One training step:
        - rolls the policy out on a batch of sampled instances (objective J)
        - back-propagates through the rollout
        - clips the gradient to `clip_norm` (global norm) and steps the optimizer

    A diverged batch or a non-finite gradient skips the update; more than
    `max_consecutive_failures` skipped updates in a row abort training.
    """

    def __init__(
        self,
        policy: RecurrentPolicy,
        system: SystemModel,
        utility: UtilityFunction,
        horizon: int,
        optimizer: str = "adam",
        lr: float = 1e-3,
        clip_norm: float = 10.0,
        max_consecutive_failures: int = 10,
    ):
        super().__init__()

        self.save_hyperparameters(ignore=["policy", "system", "utility"], logger=False)
        self.automatic_optimization = False

        self.policy = policy
        self.system = system
        self.utility = utility

        self.consecutive_failures = 0
        self.failures = 0
        # record of the last successful update, read by the callbacks
        self.last_record: Optional[Dict[str, Any]] = None

    def forward(self, x0: torch.Tensor, r: torch.Tensor, c: int):
        return self.policy(x0, r, c)

    def _fail(self, reason: str) -> None:
        self.failures += 1
        self.consecutive_failures += 1
        log.warning(f"Update skipped <reason={reason}, consecutive={self.consecutive_failures}>")
        if self.consecutive_failures > self.hparams.max_consecutive_failures:
            raise TrainingAbortedError(
                f"{self.consecutive_failures} consecutive failed updates at iteration {self.global_step}; "
                f"last failure: {reason}")

    def _clip(self) -> tuple:
        grads = [p.grad for p in self.policy.parameters() if p.grad is not None]
        norm = torch.linalg.vector_norm(torch.stack([torch.linalg.vector_norm(g) for g in grads]))
        norm = float(norm)
        clipped = bool(self.hparams.clip_norm > 0 and norm > self.hparams.clip_norm)
        if clipped:
            scale = self.hparams.clip_norm / norm
            for g in grads:
                g.mul_(scale)
        return norm, clipped

    def training_step(self, batch: Dict[str, torch.Tensor], batch_idx: int):
        opt = self.optimizers()
        opt.zero_grad()
        self.last_record = None

        try:
            objective = objective_tensor(self.system, self.utility, self.policy, batch["x0"], batch["r"],
                                         self.hparams.horizon)
        except BatchFailureError as ex:
            self._fail(str(ex))
            return None

        self.manual_backward(objective.value)
        norm, clipped = self._clip()
        if not torch.isfinite(objective.value) or not norm < float("inf"):
            self._fail("non-finite objective or gradient")
            return None
        if clipped:
            log.info(f"Gradient clipped <iteration={self.global_step + 1}, norm={norm:.6g}, "
                     f"clip_norm={self.hparams.clip_norm}>")

        opt.step()
        self.consecutive_failures = 0

        value = float(objective.value.detach())
        self.last_record = {
            "iteration": int(self.global_step),
            "J": value,
            "grad_norm": norm,
            "clip_active": clipped,
            "excluded": objective.excluded,
            "cycles": objective.cycles,
        }
        self.log("train/J", value, on_step=True, on_epoch=False, prog_bar=True, batch_size=objective.total)
        return None

    def configure_optimizers(self):
        return build_optimizer(self.hparams.optimizer, self.policy.parameters(), self.hparams.lr)
