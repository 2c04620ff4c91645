from dataclasses import asdict, dataclass, replace
from typing import List, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed

from rmpc.dynamics import SystemModel
from rmpc.errors import ContractViolation
from rmpc.rollout import MpcInstance, UtilityFunction
from rmpc.utils import get_pylogger

from .cache import OracleCache, cache_key
from .grid import solve_grid
from .riccati import riccati_applicable, solve_riccati
from .shooting import ShootingOptions, solve_shooting
from .solution import BOUNDS_ACTIVE, OracleSolution

log = get_pylogger(__name__)

SOLVERS = ("auto", "riccati", "shooting", "grid")


@dataclass(frozen=True)
class OracleOptions:
    solver: str = "auto"
    restarts: int = 5
    iterations: int = 2000
    learning_rate: float = 0.05
    tolerance: float = 1e-5
    polish: bool = True
    grid_step: float = 1e-3
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ContractViolation(f"unknown oracle solver <{self.solver}>; expected one of {SOLVERS}")

    def shooting(self) -> ShootingOptions:
        return ShootingOptions(restarts=self.restarts, iterations=self.iterations,
                               learning_rate=self.learning_rate, tolerance=self.tolerance,
                               polish=self.polish, seed=self.seed, workers=self.workers)

    def fingerprint(self, solver: str) -> dict:
        """Options that influence the solution of `solver`."""
        if solver == "riccati":
            return {"solver": "riccati"}
        if solver == "grid":
            return {"solver": "grid", "grid_step": self.grid_step}
        d = asdict(self.shooting())
        d.pop("workers")
        d["solver"] = "shooting"
        return d


class MpcOracle:
    """Callable (x0, r, N) -> OracleSolution choosing the solver for the model at hand.

    `auto` uses the Riccati recursion on linear-quadratic problems and falls back to
    shooting when the control bounds are active; every other problem goes to shooting.
    """

    def __init__(self, model: SystemModel, utility: UtilityFunction, options: OracleOptions = OracleOptions(),
                 cache: Optional[OracleCache] = None):
        self.model = model
        self.utility = utility
        self.options = options
        self.cache = cache

    def _solver(self) -> str:
        if self.options.solver != "auto":
            return self.options.solver
        return "riccati" if riccati_applicable(self.model, self.utility) else "shooting"

    def _solve(self, solver: str, x0, r, horizon: int, workers: int) -> OracleSolution:
        if solver == "riccati":
            return solve_riccati(self.model, self.utility, x0, r, horizon)
        if solver == "grid":
            return solve_grid(self.model, self.utility, x0, r, horizon, self.options.grid_step)
        return solve_shooting(self.model, self.utility, x0, r, horizon,
                              replace(self.options.shooting(), workers=workers))

    def _cached(self, solver: str, x0, r, horizon: int, workers: int) -> OracleSolution:
        if self.cache is None:
            return self._solve(solver, x0, r, horizon, workers)
        key = cache_key(self.model, self.utility, x0, r, horizon, self.options.fingerprint(solver))
        solution = self.cache.get(key)
        if solution is None:
            solution = self._solve(solver, x0, r, horizon, workers)
            self.cache.put(key, solution)
        return solution

    def solve(self, x0, r, horizon: int, workers: Optional[int] = None) -> OracleSolution:
        workers = self.options.workers if workers is None else workers
        solver = self._solver()
        solution = self._cached(solver, x0, r, horizon, workers)
        if solution.status == BOUNDS_ACTIVE and self.options.solver == "auto":
            log.debug(f"Control bounds active, falling back to shooting <N={horizon}>")
            solution = self._cached("shooting", x0, r, horizon, workers)
        return solution

    def __call__(self, x0, r, horizon: int) -> OracleSolution:
        return self.solve(x0, r, horizon)

    def solve_many(self, instances: Sequence[MpcInstance], horizons: Optional[Sequence[int]] = None,
                   workers: Optional[int] = None) -> List[OracleSolution]:
        """Solves every instance (at its own horizon unless `horizons` is given) in parallel."""
        workers = self.options.workers if workers is None else workers
        horizons = [inst.horizon for inst in instances] if horizons is None else list(horizons)
        # restarts run serially inside each solve when the instances fan out
        inner = 1 if workers > 1 else self.options.workers
        return Parallel(n_jobs=workers, prefer="threads")(
            delayed(self.solve)(inst.x0, inst.r, n, inner) for inst, n in zip(instances, horizons))


def first_controls(solutions: Sequence[OracleSolution]) -> np.ndarray:
    return np.stack([s.first_control for s in solutions])
