from dataclasses import asdict, dataclass, replace
from typing import Dict, Tuple

import numpy as np

from rmpc.errors import NumericDomainError

from .base import SystemModel
from .tire import TireForceParams, fiala_force, fiala_force_derivative

GRAVITY = 9.81


@dataclass(frozen=True)
class BicycleParams:
    vx: float = 16.0
    k1: float = -88000.0
    k2: float = -94000.0
    mass: float = 1500.0
    a: float = 1.14
    b: float = 1.40
    iz: float = 2420.0
    mu: float = 1.0
    frequency: float = 20.0
    u_bound: float = 0.2
    y_limit: float = 20.0
    phi_limit: float = float(np.pi / 2)

    @property
    def fz_front(self) -> float:
        return self.b / (self.a + self.b) * self.mass * GRAVITY

    @property
    def fz_rear(self) -> float:
        return self.a / (self.a + self.b) * self.mass * GRAVITY

    def front_tire(self) -> TireForceParams:
        return TireForceParams(C=abs(self.k1), mu=self.mu, fz=self.fz_front)

    def rear_tire(self) -> TireForceParams:
        return TireForceParams(C=abs(self.k2), mu=self.mu, fz=self.fz_rear)


def slip_angles(x, delta, params: BicycleParams) -> Tuple[np.ndarray, np.ndarray]:
    if not params.vx > 0:
        raise NumericDomainError("vx", "longitudinal speed must be positive")
    x = np.asarray(x, dtype=np.float64)
    vy, wr = x[..., 2], x[..., 3]
    alpha_f = np.arctan((vy + params.a * wr) / params.vx) - np.asarray(delta, dtype=np.float64)
    alpha_r = np.arctan((vy - params.b * wr) / params.vx)
    return alpha_f, alpha_r


class BicycleModel(SystemModel):
    """Lateral bicycle dynamics with Fiala tires at constant longitudinal speed.

    State [y (m), phi (rad), v_y (m/s), omega_r (rad/s)], control front wheel angle
    delta (rad); one forward-Euler step of length 1/frequency.
    """

    name = "bicycle"

    def __init__(self, params: BicycleParams = BicycleParams()):
        super().__init__(4, 1, -params.u_bound, params.u_bound, params.frequency)
        self.params = params
        self.front = params.front_tire()
        self.rear = params.rear_tire()

    def parameters(self) -> Dict[str, float]:
        return asdict(self.params)

    def with_params(self, **overrides) -> "BicycleModel":
        return BicycleModel(replace(self.params, **overrides))

    def sampling_box(self):
        return np.array([-3.0, -0.3, -1.0, -0.5]), np.array([3.0, 0.3, 1.0, 0.5])

    def in_envelope(self, x):
        x = np.asarray(x, dtype=np.float64)
        p = self.params
        return (np.all(np.isfinite(x), axis=-1)
                & (np.abs(x[..., 0]) <= p.y_limit)
                & (np.abs(x[..., 1]) <= p.phi_limit))

    def _forces(self, x, delta, check):
        alpha_f, alpha_r = slip_angles(x, delta, self.params)
        return alpha_f, alpha_r, fiala_force(alpha_f, self.front, check), fiala_force(alpha_r, self.rear, check)

    def step(self, x, u, check: bool = True) -> np.ndarray:
        x, u = self._coerce(x, u)
        x_next = self._euler(x, u, check)
        if check and not np.all(np.isfinite(x_next)):
            raise NumericDomainError("x_next", "in bicycle step")
        return x_next

    def _step(self, x, u):
        return self._euler(x, u, check=False)

    def _euler(self, x, u, check):
        p = self.params
        batch = np.broadcast_shapes(x.shape[:-1], u.shape[:-1])
        x = np.broadcast_to(x, batch + (4,))
        phi, vy, wr = x[..., 1], x[..., 2], x[..., 3]
        delta = np.broadcast_to(u[..., 0], batch)
        _, _, fyf, fyr = self._forces(x, delta, check)
        if check and not (np.all(np.isfinite(fyf)) and np.all(np.isfinite(fyr))):
            raise NumericDomainError("tire_force")
        derivative = np.stack([
            p.vx * np.sin(phi) + vy * np.cos(phi),
            np.broadcast_to(wr, fyf.shape),
            (fyf * np.cos(delta) + fyr) / p.mass - p.vx * wr,
            (p.a * fyf * np.cos(delta) - p.b * fyr) / p.iz,
        ], axis=-1)
        return x + derivative / p.frequency

    def _jacobians(self, x, u):
        p = self.params
        batch = np.broadcast_shapes(x.shape[:-1], u.shape[:-1])
        x = np.broadcast_to(x, batch + (4,))
        phi, vy, wr = x[..., 1], x[..., 2], x[..., 3]
        delta = np.broadcast_to(u[..., 0], batch)
        alpha_f, alpha_r, fyf, _ = self._forces(x, delta, check=False)
        dff = fiala_force_derivative(alpha_f, self.front, check=False)
        dfr = fiala_force_derivative(alpha_r, self.rear, check=False)

        qf = (vy + p.a * wr) / p.vx
        qr = (vy - p.b * wr) / p.vx
        daf_dq = 1.0 / (1.0 + qf ** 2) / p.vx
        dar_dq = 1.0 / (1.0 + qr ** 2) / p.vx
        # slip angle sensitivities
        daf_dvy, daf_dwr = daf_dq, p.a * daf_dq
        dar_dvy, dar_dwr = dar_dq, -p.b * dar_dq
        cos_d, sin_d = np.cos(delta), np.sin(delta)

        jx = np.zeros(batch + (4, 4))
        jx[..., 0, 1] = p.vx * np.cos(phi) - vy * np.sin(phi)
        jx[..., 0, 2] = np.cos(phi)
        jx[..., 1, 3] = 1.0
        jx[..., 2, 2] = (dff * daf_dvy * cos_d + dfr * dar_dvy) / p.mass
        jx[..., 2, 3] = (dff * daf_dwr * cos_d + dfr * dar_dwr) / p.mass - p.vx
        jx[..., 3, 2] = (p.a * dff * daf_dvy * cos_d - p.b * dfr * dar_dvy) / p.iz
        jx[..., 3, 3] = (p.a * dff * daf_dwr * cos_d - p.b * dfr * dar_dwr) / p.iz

        ju = np.zeros(batch + (4, 1))
        ju[..., 2, 0] = (-dff * cos_d - fyf * sin_d) / p.mass
        ju[..., 3, 0] = p.a * (-dff * cos_d - fyf * sin_d) / p.iz

        dfdx = np.eye(4) + jx / p.frequency
        dfdu = ju / p.frequency
        return dfdx, dfdu
