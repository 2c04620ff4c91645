"""Receding-horizon closed-loop simulation.

At step t the controller sees the window r_{t+1..t+N_max} of the reference stream
(padded with the last value past its end), the plant moves one step and the stage
utility is accumulated into the cost-to-go L.
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
import pandas as pd

from rmpc.dynamics import SystemModel
from rmpc.errors import ContractViolation, NumericDomainError
from rmpc.models.anytime import SimulatedClock, anytime_infer
from rmpc.models.components import RecurrentPolicy
from rmpc.rollout import UtilityFunction
from rmpc.utils import get_pylogger

log = get_pylogger(__name__)


class PolicyController:
    """Recurrent policy at a fixed cycle count c."""

    def __init__(self, policy: RecurrentPolicy, cycles: int):
        self.policy = policy
        self.cycles = cycles
        self.name = f"policy_c{cycles}"
        self.last_k = cycles

    def __call__(self, x: np.ndarray, window: np.ndarray) -> np.ndarray:
        return self.policy.act(x, window[:self.cycles], self.cycles)


class OracleController:
    """First control of the N-step optimal solution."""

    def __init__(self, oracle, horizon: int):
        self.oracle = oracle
        self.horizon = horizon
        self.name = f"oracle_N{horizon}"
        self.last_k = horizon
        self.statuses: List[str] = []

    def __call__(self, x: np.ndarray, window: np.ndarray) -> np.ndarray:
        solution = self.oracle(x, window[:self.horizon], self.horizon)
        self.statuses.append(solution.status)
        return solution.first_control


class AnytimeController:
    """Anytime inference with a per-step budget on a simulated clock."""

    def __init__(self, policy: RecurrentPolicy, budget: float, clock: SimulatedClock):
        self.policy = policy
        self.budget = budget
        self.clock = clock
        self.name = f"anytime_{budget:g}"
        self.last_k = 0

    def __call__(self, x: np.ndarray, window: np.ndarray) -> np.ndarray:
        deadline = self.clock() + self.budget
        u, self.last_k = anytime_infer(self.policy, x, window, deadline, clock=self.clock,
                                       on_cycle=self.clock.advance)
        return u


@dataclass
class ClosedLoopResult:
    states: np.ndarray
    controls: np.ndarray
    reference: np.ndarray
    utilities: np.ndarray
    ks: List[int] = field(default_factory=list)
    diverged_step: Optional[int] = None
    output_index: int = 0

    @property
    def cost(self) -> float:
        """Cost-to-go L; +inf when the run diverged."""
        if self.diverged_step is not None:
            return float("inf")
        return float(np.sum(self.utilities))

    @property
    def diverged(self) -> bool:
        return self.diverged_step is not None

    def tracking_error(self) -> float:
        """Mean |x_t[output] - r_t| over the simulated steps; +inf when the run diverged."""
        if self.diverged:
            return float("inf")
        if self.controls.shape[0] == 0:
            return 0.0
        return float(np.mean(np.abs(self.states[1:, self.output_index] - self.reference)))


def reference_window(r_stream: np.ndarray, t: int, length: int) -> np.ndarray:
    window = r_stream[t:t + length]
    if window.size < length:
        window = np.concatenate([window, np.full(length - window.size, r_stream[-1])])
    return window


def cost_to_go(model: SystemModel, utility: UtilityFunction, controller, x0, r_stream, steps: int = 200,
               n_max: int = 15, output_index: Optional[int] = None) -> ClosedLoopResult:
    """Simulates `steps` closed-loop steps and accumulates L = sum l(x_t, r_t, u_{t-1})."""
    r_stream = np.asarray(r_stream, dtype=np.float64).reshape(-1)
    if steps > 0 and r_stream.size == 0:
        raise ContractViolation("empty reference stream")
    if output_index is None:
        output_index = getattr(utility, "output_index", 0)
    x = np.asarray(x0, dtype=np.float64)
    states, controls, utilities, ks = [x], [], [], []
    diverged_step = None
    for t in range(steps):
        window = reference_window(r_stream, t, n_max)
        u = np.asarray(controller(x, window), dtype=np.float64).reshape(model.m)
        try:
            x_next = model.step(x, u)
        except NumericDomainError:
            x_next = np.full(model.n, np.nan)
        controls.append(u)
        ks.append(int(controller.last_k))
        if not bool(model.in_envelope(x_next)):
            diverged_step = t + 1
            log.warning(f"Closed loop diverged <controller={controller.name}, step={diverged_step}>")
            states.append(x_next)
            utilities.append(float("nan"))
            break
        utilities.append(float(utility.evaluate(x_next, r_stream[min(t, r_stream.size - 1)], u)))
        states.append(x_next)
        x = x_next
    count = len(controls)
    return ClosedLoopResult(
        states=np.asarray(states).reshape(-1, model.n),
        controls=np.asarray(controls).reshape(count, model.m),
        reference=np.asarray([r_stream[min(t, r_stream.size - 1)] for t in range(count)]),
        utilities=np.asarray(utilities),
        ks=ks,
        diverged_step=diverged_step,
        output_index=output_index,
    )


def trace_frame(result: ClosedLoopResult, model: SystemModel) -> pd.DataFrame:
    """Per-step rows t, x_1..x_n, u_1..u_m, r, k, event; a diverged run ends in a marker row."""
    columns = (["t"] + [f"x{j}" for j in range(model.n)] + [f"u{j}" for j in range(model.m)]
               + ["r", "k", "event"])
    rows = []
    count = result.controls.shape[0]
    period = 1.0 / model.step_frequency if model.step_frequency else 1.0
    for t in range(count):
        state = result.states[t + 1]
        diverged = result.diverged_step == t + 1
        rows.append([(t + 1) * period, *state.tolist(), *result.controls[t].tolist(), float(result.reference[t]),
                     result.ks[t], "diverged" if diverged else ""])
    return pd.DataFrame(rows, columns=columns)


def write_trace(result: ClosedLoopResult, model: SystemModel, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    trace_frame(result, model).to_csv(path, index=False, float_format="%.10g")
    return path
