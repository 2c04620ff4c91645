import time

import numpy as np

from rmpc.dynamics import SystemModel
from rmpc.errors import ContractViolation, GridBudgetError
from rmpc.rollout import UtilityFunction

from .solution import OPTIMAL, OracleSolution, build_solution

MAX_LATTICE_POINTS = 10 ** 7
MAX_GRID_HORIZON = 3
CHUNK = 1 << 18


def control_lattice(u_min: float, u_max: float, grid_step: float) -> np.ndarray:
    """u_min, u_min + step, ... up to u_max (inclusive when the range is a multiple of the step)."""
    count = int(np.floor((u_max - u_min) / grid_step + 1e-9)) + 1
    return u_min + grid_step * np.arange(count)


def solve_grid(model: SystemModel, utility: UtilityFunction, x0, r, horizon: int,
               grid_step: float = 1e-3) -> OracleSolution:
    """Exhaustive minimum over the control lattice; ties go to the first lattice point."""
    if model.m != 1:
        raise ContractViolation("grid search supports scalar controls only")
    if not 1 <= horizon <= MAX_GRID_HORIZON:
        raise ContractViolation(f"grid search supports 1 <= N <= {MAX_GRID_HORIZON}, got {horizon}")
    if grid_step <= 0:
        raise ContractViolation("grid_step must be positive")
    lattice = control_lattice(float(model.u_min[0]), float(model.u_max[0]), grid_step)
    total = lattice.size ** horizon
    if total > MAX_LATTICE_POINTS:
        raise GridBudgetError(f"lattice of {lattice.size}^{horizon} = {total} points exceeds {MAX_LATTICE_POINTS}")

    started = time.perf_counter()
    x0 = np.asarray(x0, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)[:horizon]
    best_cost, best_index = np.inf, -1
    for begin in range(0, total, CHUNK):
        flat = np.arange(begin, min(begin + CHUNK, total))
        digits = np.stack(np.unravel_index(flat, (lattice.size,) * horizon), axis=-1)
        controls = lattice[digits][..., None]
        x = np.broadcast_to(x0, (flat.size, model.n))
        cost = np.zeros(flat.size)
        with np.errstate(all="ignore"):
            for i in range(horizon):
                x = model.step(x, controls[:, i], check=False)
                cost += utility.evaluate(x, r[i], controls[:, i])
        cost[~np.isfinite(cost)] = np.inf
        idx = int(np.argmin(cost))
        if cost[idx] < best_cost:
            best_cost, best_index = float(cost[idx]), int(flat[idx])
    if best_index < 0:
        raise ContractViolation("every lattice point diverged")

    digits = np.unravel_index(best_index, (lattice.size,) * horizon)
    controls = lattice[np.asarray(digits)].reshape(horizon, 1)
    stats = {"solver": "grid", "lattice": int(lattice.size), "points": int(total),
             "wall_ms": (time.perf_counter() - started) * 1e3}
    return build_solution(model, utility, x0, r, controls, OPTIMAL, stats)
