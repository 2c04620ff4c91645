"""Fiala brush tire model, lateral force only.

The cornering stiffness C is the magnitude of the axle stiffness so that the
small-angle slope of F_y(alpha) is -C. Past the sliding angle
tan(alpha_max) = 3 mu F_z / C the force stays at -sign(alpha) mu F_z.
"""
from dataclasses import dataclass

import numpy as np

from rmpc.errors import ContractViolation, NumericDomainError


@dataclass(frozen=True)
class TireForceParams:
    C: float
    mu: float
    fz: float

    def __post_init__(self):
        if not (self.C > 0 and self.mu > 0 and self.fz > 0):
            raise ContractViolation(f"tire parameters must be positive <C={self.C}, mu={self.mu}, fz={self.fz}>")

    @property
    def tan_alpha_max(self) -> float:
        return 3.0 * self.mu * self.fz / self.C

    @property
    def alpha_max(self) -> float:
        return float(np.arctan(self.tan_alpha_max))


def _check_alpha(alpha: np.ndarray) -> None:
    if np.any(~np.isfinite(alpha)) or np.any(np.abs(alpha) >= np.pi / 2):
        raise NumericDomainError("alpha", "slip angle must satisfy |alpha| < pi/2")


def fiala_force(alpha, p: TireForceParams, check: bool = True) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=np.float64)
    if check:
        _check_alpha(alpha)
    t = np.tan(alpha)
    grip = p.mu * p.fz
    cubic = -p.C * t * (p.C ** 2 * t ** 2 / (27.0 * grip ** 2) - p.C * np.abs(t) / (3.0 * grip) + 1.0)
    sliding = -np.sign(alpha) * grip
    # |alpha| == alpha_max takes the cubic branch
    return np.where(np.abs(t) <= p.tan_alpha_max, cubic, sliding)


def fiala_force_derivative(alpha, p: TireForceParams, check: bool = True) -> np.ndarray:
    """dF_y/dalpha; at the breakpoint the unsaturated branch is used (both sides are 0 there)."""
    alpha = np.asarray(alpha, dtype=np.float64)
    if check:
        _check_alpha(alpha)
    t = np.tan(alpha)
    grip = p.mu * p.fz
    dfdt = -p.C + 2.0 * p.C ** 2 * np.abs(t) / (3.0 * grip) - p.C ** 3 * t ** 2 / (9.0 * grip ** 2)
    sec2 = 1.0 + t ** 2
    return np.where(np.abs(t) <= p.tan_alpha_max, dfdt * sec2, 0.0)
