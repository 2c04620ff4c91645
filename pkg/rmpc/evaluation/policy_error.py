"""Policy error e_N against an optimal-control oracle.

e_N = mean_i |u*_0(x0_i, r_i, N) - pi^N(x0_i, r_i)| / (u*_max - u*_min)

where the extrema run over the oracle first controls of the whole evaluation set
and every horizon N in the table, not per N. Instances whose oracle solve is not
`optimal` are left out of both the extrema and the means.
"""
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from tqdm import tqdm

from rmpc.errors import ContractViolation, ReportRefusedError
from rmpc.oracle import OracleSolution, first_controls
from rmpc.rollout import MpcInstance
from rmpc.utils import get_pylogger

log = get_pylogger(__name__)

MIN_DENOMINATOR = 1e-9
Z_95 = 1.96

OracleTable = Dict[int, List[OracleSolution]]


def mean_ci(values: Sequence[float]):
    """(mean, half width of the 95% normal interval, count)."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return float("nan"), float("nan"), 0
    half = Z_95 * values.std(ddof=1) / np.sqrt(values.size) if values.size > 1 else 0.0
    return float(values.mean()), float(half), int(values.size)


def solve_oracle_table(oracle_fn: Callable, instances: Sequence[MpcInstance], horizons: Sequence[int],
                       solve_many: Optional[Callable] = None) -> OracleTable:
    """Oracle solutions of every instance truncated to each horizon N."""
    table = {}
    for n in tqdm(horizons, desc="oracle solves", leave=False):
        truncated = [inst.truncated(n) for inst in instances]
        if solve_many is not None:
            table[n] = solve_many(truncated)
        else:
            table[n] = [oracle_fn(inst.x0, inst.r, n) for inst in truncated]
    return table


def control_range(table: OracleTable) -> np.ndarray:
    """u*_max - u*_min per control component over all optimal first controls."""
    optimal = [s for sols in table.values() for s in sols if s.is_optimal]
    if not optimal:
        raise ReportRefusedError("no optimal oracle solutions to normalize the policy error")
    controls = first_controls(optimal)
    span = controls.max(axis=0) - controls.min(axis=0)
    if np.any(span < MIN_DENOMINATOR):
        raise ReportRefusedError(
            f"degenerate policy error denominator <u*_max - u*_min={span.tolist()}> over {len(controls)} solutions")
    return span


def policy_error_table(policy, instances: Sequence[MpcInstance], table: OracleTable) -> pd.DataFrame:
    """One row per horizon: N, e_N, 95% interval, sample count and excluded count."""
    span = control_range(table)
    rows = []
    for n in sorted(table):
        errors = []
        excluded = 0
        for inst, sol in zip(instances, table[n]):
            if not sol.is_optimal:
                excluded += 1
                continue
            u = policy.act(inst.x0, inst.r[:n], n)
            errors.append(float(np.mean(np.abs(sol.first_control - u) / span)))
        mean, half, count = mean_ci(errors)
        rows.append({"N": n, "e_N": mean, "ci_low": mean - half, "ci_high": mean + half,
                     "n": count, "excluded": excluded})
        if excluded:
            log.warning(f"Excluded non-optimal oracle solves from e_N <N={n}, excluded={excluded}>")
    return pd.DataFrame(rows, columns=["N", "e_N", "ci_low", "ci_high", "n", "excluded"])


def policy_error(policy, oracle_fn: Callable, eval_set: Sequence[MpcInstance], horizon: int,
                 horizons: Optional[Sequence[int]] = None) -> float:
    """e_N for one horizon; the denominator still spans all `horizons` (default 1..len(r))."""
    if not eval_set:
        raise ContractViolation("empty evaluation set")
    if horizons is None:
        horizons = range(1, min(inst.r.size for inst in eval_set) + 1)
    horizons = sorted(set(horizons) | {horizon})
    table = solve_oracle_table(oracle_fn, eval_set, horizons)
    df = policy_error_table(policy, eval_set, table)
    return float(df.loc[df["N"] == horizon, "e_N"].iloc[0])


def error_monitor(oracle_fn: Callable, horizons: Sequence[int]) -> Callable:
    """Callable (policy, instances) -> {N: e_N}; oracle solutions are solved once and reused."""
    cache = {}

    def evaluate(policy, instances):
        key = id(instances[0]) if instances else None
        if key not in cache:
            cache.clear()
            cache[key] = solve_oracle_table(oracle_fn, instances, horizons)
        df = policy_error_table(policy, instances, cache[key])
        return dict(zip(df["N"].tolist(), df["e_N"].tolist()))

    return evaluate
