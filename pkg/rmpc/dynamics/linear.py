from typing import Dict, Tuple

import numpy as np

from rmpc.errors import ContractViolation

from .base import SystemModel


class LinearModel(SystemModel):
    """x_{i+1} = A x_i + B u_i."""

    name = "linear"
    is_linear = True

    def __init__(self, A, B, u_min, u_max, step_frequency=None):
        A = np.array(A, dtype=np.float64)
        B = np.array(B, dtype=np.float64)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or B.ndim != 2 or B.shape[0] != A.shape[0]:
            raise ContractViolation(f"incompatible A{A.shape} / B{B.shape}")
        super().__init__(A.shape[0], B.shape[1], u_min, u_max, step_frequency)
        self.A = A
        self.B = B
        self.A.setflags(write=False)
        self.B.setflags(write=False)

    def parameters(self) -> Dict[str, float]:
        params = {f"A{i}{j}": v for (i, j), v in np.ndenumerate(self.A)}
        params.update({f"B{i}{j}": v for (i, j), v in np.ndenumerate(self.B)})
        return params

    def with_params(self, **overrides) -> "LinearModel":
        A, B = self.A.copy(), self.B.copy()
        for key, value in overrides.items():
            target = A if key.startswith("A") else B
            target[int(key[1]), int(key[2])] = value
        return LinearModel(A, B, self.u_min, self.u_max, self.step_frequency)

    def _step(self, x, u):
        return x @ self.A.T + u @ self.B.T

    def _jacobians(self, x, u) -> Tuple[np.ndarray, np.ndarray]:
        batch = np.broadcast_shapes(x.shape[:-1], u.shape[:-1])
        return (np.broadcast_to(self.A, batch + self.A.shape).copy(),
                np.broadcast_to(self.B, batch + self.B.shape).copy())


class DoubleIntegrator(LinearModel):
    """Position/velocity double integrator sampled at `dt`."""

    name = "double_integrator"

    def __init__(self, dt: float = 0.05, u_bound: float = 1.0):
        self.dt = float(dt)
        self.u_bound = float(u_bound)
        super().__init__([[1.0, dt], [0.0, 1.0]], [[0.0], [dt]], -u_bound, u_bound, 1.0 / dt)

    def parameters(self) -> Dict[str, float]:
        return {"dt": self.dt, "u_bound": self.u_bound}

    def with_params(self, **overrides) -> "DoubleIntegrator":
        params = {**self.parameters(), **overrides}
        return DoubleIntegrator(**params)
