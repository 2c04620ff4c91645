"""Parameter update rules shared by policy training and the shooting oracle.

`gd_step` and `adam_step` are pure functions over numpy arrays or torch tensors;
the `torch.optim.Optimizer` subclasses below apply them in place so that Lightning
can drive them.
"""
from dataclasses import dataclass
from typing import Any, Tuple

import numpy as np
import torch

from rmpc.utils import get_pylogger

log = get_pylogger(__name__)

BETA1 = 0.9
BETA2 = 0.999
ADAM_EPS = 1e-8


def _finite(g) -> bool:
    if isinstance(g, torch.Tensor):
        return bool(torch.all(torch.isfinite(g)))
    return bool(np.all(np.isfinite(g)))


def gd_step(theta, g, lr: float):
    """theta - lr * g; a non-finite g leaves theta untouched."""
    if not _finite(g):
        log.warning("Non-finite gradient, keeping previous parameters <step=gd>")
        return theta
    return theta - lr * g


@dataclass
class AdamState:
    m: Any
    v: Any
    t: int = 0

    @classmethod
    def zeros_like(cls, theta) -> "AdamState":
        if isinstance(theta, torch.Tensor):
            return cls(torch.zeros_like(theta), torch.zeros_like(theta))
        theta = np.asarray(theta, dtype=np.float64)
        return cls(np.zeros_like(theta), np.zeros_like(theta))


def adam_step(state: AdamState, theta, g, lr: float, beta1: float = BETA1, beta2: float = BETA2,
              eps: float = ADAM_EPS) -> Tuple[AdamState, Any]:
    """Bias-corrected first/second moment update."""
    if not _finite(g):
        log.warning("Non-finite gradient, keeping previous parameters <step=adam>")
        return state, theta
    t = state.t + 1
    m = beta1 * state.m + (1.0 - beta1) * g
    v = beta2 * state.v + (1.0 - beta2) * g * g
    m_hat = m / (1.0 - beta1 ** t)
    v_hat = v / (1.0 - beta2 ** t)
    return AdamState(m, v, t), theta - lr * m_hat / (v_hat ** 0.5 + eps)


class _PureStepOptimizer(torch.optim.Optimizer):
    def __init__(self, params, defaults):
        super().__init__(params, defaults)
        self.skipped = False

    def _gradients(self):
        pairs = [(group, p) for group in self.param_groups for p in group["params"] if p.grad is not None]
        finite = all(bool(torch.all(torch.isfinite(p.grad))) for _, p in pairs)
        return pairs, finite

    @torch.no_grad()
    def step(self, closure=None):
        loss = None
        if closure is not None:
            with torch.enable_grad():
                loss = closure()
        pairs, finite = self._gradients()
        # the update is all-or-nothing across parameter tensors
        self.skipped = not finite
        if self.skipped:
            log.warning("Non-finite gradient, step skipped")
            return loss
        for group, p in pairs:
            p.copy_(self._update(group, p))
        return loss

    def _update(self, group, p) -> torch.Tensor:
        raise NotImplementedError


class GradientDescent(_PureStepOptimizer):
    def __init__(self, params, lr: float):
        if lr <= 0:
            raise ValueError(f"Invalid learning rate: {lr}")
        super().__init__(params, dict(lr=lr))

    def _update(self, group, p):
        return gd_step(p, p.grad, group["lr"])


class BiasCorrectedAdam(_PureStepOptimizer):
    def __init__(self, params, lr: float, betas: Tuple[float, float] = (BETA1, BETA2), eps: float = ADAM_EPS):
        if lr <= 0:
            raise ValueError(f"Invalid learning rate: {lr}")
        super().__init__(params, dict(lr=lr, betas=betas, eps=eps))

    def _update(self, group, p):
        state = self.state[p]
        if "adam" not in state:
            state["adam"] = AdamState.zeros_like(p)
        beta1, beta2 = group["betas"]
        state["adam"], theta = adam_step(state["adam"], p, p.grad, group["lr"], beta1, beta2, group["eps"])
        return theta


def build_optimizer(name: str, params, lr: float) -> torch.optim.Optimizer:
    if name == "gd":
        return GradientDescent(params, lr)
    if name == "adam":
        return BiasCorrectedAdam(params, lr)
    raise ValueError(f"unknown optimizer <{name}>")
