from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from rmpc.errors import ContractViolation


@dataclass(frozen=True)
class MpcInstance:
    """Initial state, reference r_{1:L} and horizon N <= L of one MPC problem."""

    x0: np.ndarray
    r: np.ndarray
    horizon: int

    def __post_init__(self):
        x0 = np.array(self.x0, dtype=np.float64).reshape(-1)
        r = np.array(self.r, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "horizon", int(self.horizon))
        if not 1 <= self.horizon <= r.size:
            raise ContractViolation(f"horizon N={self.horizon} must lie in [1, len(r)={r.size}]")
        if not (np.all(np.isfinite(x0)) and np.all(np.isfinite(r))):
            raise ContractViolation("instance contains non-finite values")

    def truncated(self, horizon: int) -> "MpcInstance":
        return MpcInstance(self.x0, self.r[:horizon], horizon)

    def to_dict(self):
        return {"x0": self.x0.tolist(), "r": self.r.tolist(), "horizon": self.horizon}


def stack_instances(instances: Sequence[MpcInstance]) -> Tuple[np.ndarray, np.ndarray, int]:
    """(x0 of shape (B, n), r of shape (B, N), N) for instances sharing one horizon."""
    if len(instances) == 0:
        raise ContractViolation("empty instance batch")
    horizons = {inst.horizon for inst in instances}
    if len(horizons) != 1:
        raise ContractViolation(f"instances in a batch must share one horizon, got {sorted(horizons)}")
    horizon = horizons.pop()
    x0 = np.stack([inst.x0 for inst in instances])
    r = np.stack([inst.r[:horizon] for inst in instances])
    return x0, r, horizon
