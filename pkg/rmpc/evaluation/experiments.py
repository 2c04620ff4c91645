from dataclasses import dataclass
from typing import Callable, List, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from tqdm import tqdm

from rmpc.datamodules.components import SamplerSpec, sample_reference
from rmpc.dynamics import SystemModel
from rmpc.models.anytime import SimulatedClock
from rmpc.models.components import RecurrentPolicy
from rmpc.rollout import UtilityFunction
from rmpc.utils import get_pylogger

from .closed_loop import AnytimeController, ClosedLoopResult, OracleController, PolicyController, cost_to_go

log = get_pylogger(__name__)


@dataclass(frozen=True)
class ClosedLoopStart:
    x0: np.ndarray
    r_stream: np.ndarray


def random_starts(spec: SamplerSpec, rng: np.random.Generator, count: int, steps: int,
                  n_max: int) -> List[ClosedLoopStart]:
    """Closed-loop starts drawn like training instances, with references long enough for the run."""
    starts = []
    for _ in range(count):
        r = sample_reference(spec, rng, steps + n_max)
        x0 = rng.uniform(np.asarray(spec.state_low), np.asarray(spec.state_high))
        if spec.track_index is not None:
            x0[spec.track_index] += r[0]
        starts.append(ClosedLoopStart(x0, r))
    return starts


def run_starts(model: SystemModel, utility: UtilityFunction, make_controller: Callable,
               starts: Sequence[ClosedLoopStart], steps: int, n_max: int, workers: int = 1) -> List[ClosedLoopResult]:
    """Closed loop from every start; `make_controller()` gives each run its own controller."""
    return Parallel(n_jobs=workers, prefer="threads")(
        delayed(cost_to_go)(model, utility, make_controller(), s.x0, s.r_stream, steps, n_max) for s in starts)


def _finite_mean(values) -> float:
    values = np.asarray(values, dtype=np.float64)
    values = values[np.isfinite(values)]
    return float(values.mean()) if values.size else float("nan")


def horizon_cost_table(model: SystemModel, utility: UtilityFunction, policy: RecurrentPolicy, oracle,
                       cycles: Sequence[int], starts: Sequence[ClosedLoopStart], steps: int, n_max: int,
                       workers: int = 1, with_oracle: bool = True) -> pd.DataFrame:
    """Mean cost-to-go L of the policy at c cycles and of the oracle at horizon N = c."""
    rows = []
    for c in tqdm(cycles, desc="closed loop", leave=False):
        policy_runs = run_starts(model, utility, lambda: PolicyController(policy, c), starts, steps, n_max, workers)
        row = {"c": c, "policy_L": _finite_mean([run.cost for run in policy_runs]),
               "policy_diverged": sum(run.diverged for run in policy_runs), "n": len(starts)}
        if with_oracle:
            oracle_runs = run_starts(model, utility, lambda: OracleController(oracle, c), starts, steps, n_max,
                                     workers)
            row["oracle_L"] = _finite_mean([run.cost for run in oracle_runs])
            row["oracle_diverged"] = sum(run.diverged for run in oracle_runs)
        rows.append(row)
        log.info(f"Cost-to-go <c={c}, policy_L={row['policy_L']:.6g}>")
    return pd.DataFrame(rows)


def tracking_error_table(model: SystemModel, utility: UtilityFunction, policy: RecurrentPolicy, oracle,
                         cycles: Sequence[int], start: ClosedLoopStart, steps: int, n_max: int) -> pd.DataFrame:
    """Mean absolute closed-loop tracking error on one scenario per cycle count c."""
    rows = []
    for c in cycles:
        policy_run = cost_to_go(model, utility, PolicyController(policy, c), start.x0, start.r_stream, steps, n_max)
        oracle_run = cost_to_go(model, utility, OracleController(oracle, c), start.x0, start.r_stream, steps, n_max)
        rows.append({"c": c, "policy_tracking_error": policy_run.tracking_error(),
                     "oracle_tracking_error": oracle_run.tracking_error(),
                     "policy_L": policy_run.cost, "oracle_L": oracle_run.cost})
    return pd.DataFrame(rows)


def anytime_experiment(model: SystemModel, utility: UtilityFunction, policy: RecurrentPolicy,
                       budgets: Sequence[float], cycle_cost, starts: Sequence[ClosedLoopStart], steps: int,
                       n_max: int, workers: int = 1) -> pd.DataFrame:
    """Realized cycle counts k and cost-to-go L per simulated per-step budget."""
    if list(budgets) != sorted(budgets):
        raise ValueError("budgets must be sorted ascending")
    rows = []
    for budget in tqdm(budgets, desc="anytime budgets", leave=False):
        runs = run_starts(model, utility, lambda: AnytimeController(policy, budget, SimulatedClock(cycle_cost)),
                          starts, steps, n_max, workers)
        ks = [k for run in runs for k in run.ks]
        rows.append({
            "budget": float(budget),
            "k_mean": float(np.mean(ks)) if ks else float("nan"),
            "k_min": int(min(ks)) if ks else 0,
            "k_max": int(max(ks)) if ks else 0,
            "L_mean": _finite_mean([run.cost for run in runs]),
            "diverged": sum(run.diverged for run in runs),
            "n": len(runs),
        })
    return pd.DataFrame(rows)
