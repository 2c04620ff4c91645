"""Finite-horizon LQ tracking by backward dynamic programming.

Stage cost on x_1..x_N with M = C^T Q C + S and m_i = C^T Q r_i:

    l_i = x_i^T M x_i - 2 m_i^T x_i + u_{i-1}^T R u_{i-1} + const

and the cost-to-go from x_k is x^T P_k x - 2 p_k^T x + const with P_N = M, p_N = m_N.
"""
import time

import numpy as np

from rmpc.dynamics import SystemModel
from rmpc.errors import ContractViolation, NumericDomainError
from rmpc.rollout import QuadraticTrackingUtility, UtilityFunction
from rmpc.utils import get_pylogger

from .solution import BOUND_TOLERANCE, BOUNDS_ACTIVE, OPTIMAL, OracleSolution, build_solution

log = get_pylogger(__name__)


def riccati_applicable(model: SystemModel, utility: UtilityFunction) -> bool:
    return bool(model.is_linear) and isinstance(utility, QuadraticTrackingUtility)


def riccati_gains(A, B, C, Q, R, S, r):
    """Feedback gains K_k and feedforward terms k_k for k = 0..N-1 (u_k = -K_k x_k + k_k)."""
    horizon = r.shape[0]
    M = C.T @ Q @ C + S
    m = (C.T @ Q @ r[:, None, None]).reshape(horizon, -1)
    P, p = M, m[-1]
    gains, feedforward = [None] * horizon, [None] * horizon
    for k in range(horizon - 1, -1, -1):
        H = R + B.T @ P @ B
        try:
            K = np.linalg.solve(H, B.T @ P @ A)
            kff = np.linalg.solve(H, B.T @ p)
        except np.linalg.LinAlgError as ex:
            raise NumericDomainError("H", "singular control Hessian in Riccati step") from ex
        gains[k], feedforward[k] = K, kff
        if k > 0:
            p = m[k - 1] + A.T @ p - K.T @ (B.T @ p)
            P = M + A.T @ P @ A - A.T @ P @ B @ K
            P = 0.5 * (P + P.T)
    return gains, feedforward


def solve_riccati(model: SystemModel, utility: UtilityFunction, x0, r, horizon: int) -> OracleSolution:
    """Globally optimal controls of the unconstrained LQ problem.

    If the unconstrained optimum leaves the control box the clipped sequence is
    returned with status `bounds-active`; callers should fall back to shooting.
    """
    if not riccati_applicable(model, utility):
        raise ContractViolation("Riccati oracle needs a linear model and a quadratic tracking utility")
    started = time.perf_counter()
    r = np.asarray(r, dtype=np.float64)[:horizon]
    x = np.asarray(x0, dtype=np.float64)
    C, Q, R, S = utility.quadratic_form(model.m)
    gains, feedforward = riccati_gains(model.A, model.B, C, Q, R, S, r)

    controls = np.empty((horizon, model.m))
    for k in range(horizon):
        controls[k] = -gains[k] @ x + feedforward[k]
        x = model.A @ x + model.B @ controls[k]

    status = OPTIMAL
    if np.any(controls < model.u_min - BOUND_TOLERANCE) or np.any(controls > model.u_max + BOUND_TOLERANCE):
        log.debug(f"Unconstrained LQ optimum violates the control box <max|u|={np.abs(controls).max():.4g}>")
        status = BOUNDS_ACTIVE
        controls = model.saturate(controls)
    stats = {"solver": "riccati", "wall_ms": (time.perf_counter() - started) * 1e3}
    return build_solution(model, utility, x0, r, controls, status, stats)
