"""Budget-aware inference: run recurrent cycles until the deadline passes."""
import time
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
import torch

from .components.recurrent_policy import RecurrentPolicy


class SimulatedClock:
    """Deterministic clock advanced by a fixed cost per recurrent cycle.

    `cycle_costs` is either one constant cost or a sequence (t_1, t_2, ...); calling
    `advance(c)` after cycle c adds t_c to the current time.
    """

    def __init__(self, cycle_costs: Union[float, Sequence[float]], start: float = 0.0):
        self.cycle_costs = cycle_costs
        self.now = float(start)

    def cost(self, c: int) -> float:
        if np.isscalar(self.cycle_costs):
            return float(self.cycle_costs)
        return float(self.cycle_costs[c - 1])

    def advance(self, c: int) -> None:
        self.now += self.cost(c)

    def __call__(self) -> float:
        return self.now


def cycles_within_budget(budget: float, cycle_costs: Union[float, Sequence[float]], n_max: int) -> int:
    """Largest k with t_1 + ... + t_k <= budget (N_max if all fit), floored at 1."""
    clock = SimulatedClock(cycle_costs)
    k = 0
    for c in range(1, n_max + 1):
        clock.advance(c)
        if clock() > budget:
            break
        k = c
    return max(k, 1)


@torch.no_grad()
def anytime_infer(policy: RecurrentPolicy, x0, r, deadline: float,
                  clock: Callable[[], float] = time.monotonic,
                  on_cycle: Optional[Callable[[int], None]] = None) -> Tuple[np.ndarray, int]:
    """Returns (pi^k(x0, r_{1:k}), k) where k counts the cycles finished by `deadline`.

    The clock is read after every full cycle; a cycle finishing after the deadline is
    discarded, except the first one, which is always returned.
    """
    u_best, k = None, 0
    for c, u in enumerate(policy.iter_cycles(x0, r), start=1):
        if on_cycle is not None:
            on_cycle(c)
        if clock() > deadline:
            if c == 1:
                u_best, k = u, 1
            break
        u_best, k = u, c
    return u_best.numpy().copy(), k
