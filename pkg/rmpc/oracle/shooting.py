"""Direct single shooting over the control sequence.

Controls are optimized in normalized coordinates z in [-1, 1] with
u = center + half_range * z. Every restart runs projected adaptive-moment steps,
then (optionally) a bounded quasi-Newton polish from its best iterate.
"""
import time
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy.optimize import minimize

from rmpc.dynamics import SystemModel
from rmpc.errors import ContractViolation
from rmpc.models.optim import AdamState, adam_step
from rmpc.rollout import UtilityFunction
from rmpc.utils import component_rng, get_pylogger

from .solution import MAX_ITERS, OPTIMAL, RESTARTS_DISAGREE, OracleSolution, build_solution

log = get_pylogger(__name__)

PROJECTED_GRADIENT_TOLERANCE = 1e-6


@dataclass(frozen=True)
class ShootingOptions:
    restarts: int = 5
    iterations: int = 2000
    learning_rate: float = 0.05
    tolerance: float = 1e-5
    polish: bool = True
    seed: int = 0
    workers: int = 1


@dataclass
class RestartResult:
    index: int
    z: np.ndarray
    cost: float
    converged: bool
    iterations: int


class ShootingProblem:
    """Cost and adjoint gradient of V(x0, r, N) as a function of normalized controls."""

    def __init__(self, model: SystemModel, utility: UtilityFunction, x0, r, horizon: int):
        self.model = model
        self.utility = utility
        self.x0 = np.asarray(x0, dtype=np.float64)
        self.r = np.asarray(r, dtype=np.float64)[:horizon]
        self.horizon = horizon
        self.center = 0.5 * (model.u_max + model.u_min)
        self.half = 0.5 * (model.u_max - model.u_min)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.horizon, self.model.m

    def controls(self, z) -> np.ndarray:
        return self.center + self.half * np.asarray(z).reshape(self.shape)

    def cost_and_grad(self, z) -> Tuple[float, np.ndarray]:
        u = self.controls(z)
        states = np.empty((self.horizon + 1, self.model.n))
        states[0] = self.x0
        with np.errstate(all="ignore"):
            for i in range(self.horizon):
                states[i + 1] = self.model.step(states[i], u[i], check=False)
            if not np.all(np.isfinite(states)):
                return np.inf, np.zeros(self.horizon * self.model.m)
            cost = float(np.sum(self.utility.evaluate(states[1:], self.r, u)))
            lx, lu = self.utility.gradients(states[1:], self.r, u)
            dfdx, dfdu = self.model.jacobians(states[:-1], u)
        # adjoint sweep: lam_i = dV/dx_i
        grad_u = np.empty_like(u)
        lam = np.zeros(self.model.n)
        for i in range(self.horizon - 1, -1, -1):
            lam = lx[i] + lam
            grad_u[i] = lu[i] + dfdu[i].T @ lam
            lam = dfdx[i].T @ lam
        if not np.isfinite(cost) or not np.all(np.isfinite(grad_u)):
            return np.inf, np.zeros(self.horizon * self.model.m)
        return cost, (grad_u * self.half).reshape(-1)

    @staticmethod
    def projected_gradient(z, g) -> np.ndarray:
        g = np.array(g, dtype=np.float64)
        g[(z <= -1.0) & (g > 0)] = 0.0
        g[(z >= 1.0) & (g < 0)] = 0.0
        return g


def _run_restart(problem: ShootingProblem, z0: np.ndarray, index: int, options: ShootingOptions) -> RestartResult:
    z = z0.reshape(-1).copy()
    state = AdamState.zeros_like(z)
    best_z, best_cost = z.copy(), np.inf
    for _ in range(options.iterations):
        cost, g = problem.cost_and_grad(z)
        if cost < best_cost:
            best_z, best_cost = z.copy(), cost
        state, z = adam_step(state, z, g, options.learning_rate)
        z = np.clip(z, -1.0, 1.0)
    cost, _ = problem.cost_and_grad(z)
    if cost < best_cost:
        best_z, best_cost = z.copy(), cost

    if options.polish and np.isfinite(best_cost):
        res = minimize(problem.cost_and_grad, best_z, jac=True, method="L-BFGS-B",
                       bounds=[(-1.0, 1.0)] * best_z.size,
                       options={"ftol": 1e-15, "gtol": 1e-10, "maxiter": 1000})
        z_polished = np.clip(res.x, -1.0, 1.0)
        polished_cost, _ = problem.cost_and_grad(z_polished)
        if polished_cost <= best_cost:
            best_z, best_cost = z_polished, polished_cost

    _, g = problem.cost_and_grad(best_z)
    converged = bool(np.isfinite(best_cost)
                     and np.max(np.abs(problem.projected_gradient(best_z, g)), initial=0.0)
                     <= PROJECTED_GRADIENT_TOLERANCE * max(1.0, abs(best_cost)))
    return RestartResult(index, best_z, float(best_cost), converged, options.iterations)


def _initial_points(shape: Tuple[int, int], options: ShootingOptions) -> List[np.ndarray]:
    points = [np.zeros(shape)]
    for k in range(1, options.restarts):
        rng = component_rng(options.seed, f"restart-{k}")
        points.append(rng.uniform(-1.0, 1.0, size=shape))
    return points


def solve_shooting(model: SystemModel, utility: UtilityFunction, x0, r, horizon: int,
                   options: ShootingOptions = ShootingOptions()) -> OracleSolution:
    """Best-of-restarts projected shooting; `optimal` needs two restarts agreeing on V*."""
    if horizon < 1:
        raise ContractViolation(f"horizon N={horizon} must be >= 1")
    if options.restarts < 1:
        raise ContractViolation("shooting needs at least one restart")
    started = time.perf_counter()
    problem = ShootingProblem(model, utility, x0, r, horizon)
    points = _initial_points(problem.shape, options)
    results = Parallel(n_jobs=options.workers, prefer="threads")(
        delayed(_run_restart)(problem, z0, k, options) for k, z0 in enumerate(points))

    best = min(results, key=lambda res: (res.cost, res.index))
    tolerance = options.tolerance * max(1.0, abs(best.cost))
    agreeing = sum(1 for res in results if abs(res.cost - best.cost) <= tolerance)
    if not best.converged:
        status = MAX_ITERS
    elif agreeing >= 2:
        status = OPTIMAL
    else:
        status = RESTARTS_DISAGREE
        log.warning(f"Shooting restarts disagree <N={horizon}, x0={problem.x0.tolist()}, "
                    f"costs={[round(res.cost, 9) for res in results]}>")
    stats = {
        "solver": "shooting",
        "iterations": int(sum(res.iterations for res in results)),
        "restarts": len(results),
        "agreeing": agreeing,
        "best_restart": best.index,
        "wall_ms": (time.perf_counter() - started) * 1e3,
    }
    controls = np.clip(problem.controls(best.z), model.u_min, model.u_max)
    return build_solution(model, utility, x0, problem.r, controls, status, stats)
