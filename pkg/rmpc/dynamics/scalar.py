from typing import Dict

import numpy as np

from .base import SystemModel


class CubicScalarModel(SystemModel):
    """x_{i+1} = x_i + dt (-x_i^3 + u_i); small enough for exhaustive grid search."""

    name = "scalar_cubic"

    def __init__(self, dt: float = 0.1, u_bound: float = 1.0, x_limit: float = 10.0):
        super().__init__(1, 1, -u_bound, u_bound, 1.0 / dt)
        self.dt = float(dt)
        self.u_bound = float(u_bound)
        self.x_limit = float(x_limit)

    def parameters(self) -> Dict[str, float]:
        return {"dt": self.dt, "u_bound": self.u_bound, "x_limit": self.x_limit}

    def with_params(self, **overrides) -> "CubicScalarModel":
        return CubicScalarModel(**{**self.parameters(), **overrides})

    def _step(self, x, u):
        return x + self.dt * (-x ** 3 + u)

    def _jacobians(self, x, u):
        dfdx = (1.0 - 3.0 * self.dt * x ** 2)[..., None]
        dfdu = np.broadcast_to(self.dt, x.shape[:-1] + (1, 1)).copy()
        batch = np.broadcast_shapes(x.shape[:-1], u.shape[:-1])
        return np.broadcast_to(dfdx, batch + (1, 1)).copy(), np.broadcast_to(dfdu, batch + (1, 1)).copy()

    def in_envelope(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.all(np.isfinite(x) & (np.abs(x) <= self.x_limit), axis=-1)
