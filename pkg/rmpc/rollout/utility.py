from abc import ABC, abstractmethod
from typing import Dict, Sequence, Tuple

import numpy as np

from rmpc.errors import ContractViolation


class UtilityFunction(ABC):
    """Non-negative stage cost l(x_i, r_i, u_{i-1}) with analytic gradients.

    `x` has shape (..., n), `r` shape (...) (scalar reference per step) and `u`
    shape (..., m).
    """

    @abstractmethod
    def evaluate(self, x, r, u) -> np.ndarray:
        ...

    @abstractmethod
    def gradients(self, x, r, u) -> Tuple[np.ndarray, np.ndarray]:
        """Returns (dl/dx of shape (..., n), dl/du of shape (..., m))."""

    @abstractmethod
    def describe(self) -> Dict:
        ...


class QuadraticTrackingUtility(UtilityFunction):
    """l = w_t (x[k] - r)^2 + w_u |u|^2 + sum_j s_j x_j^2."""

    def __init__(self, output_index: int, tracking_weight: float, control_weight: float,
                 state_weights: Sequence[float]):
        self.output_index = int(output_index)
        self.tracking_weight = float(tracking_weight)
        self.control_weight = float(control_weight)
        self.state_weights = np.asarray(state_weights, dtype=np.float64)
        if self.tracking_weight < 0 or self.control_weight < 0 or np.any(self.state_weights < 0):
            raise ContractViolation("utility weights must be non-negative")
        if not 0 <= self.output_index < self.state_weights.size:
            raise ContractViolation(
                f"output_index {self.output_index} outside state of size {self.state_weights.size}")

    @property
    def n(self) -> int:
        return self.state_weights.size

    def evaluate(self, x, r, u):
        x = np.asarray(x, dtype=np.float64)
        u = np.asarray(u, dtype=np.float64)
        err = x[..., self.output_index] - np.asarray(r, dtype=np.float64)
        return (self.tracking_weight * err ** 2
                + self.control_weight * np.sum(u ** 2, axis=-1)
                + np.sum(self.state_weights * x ** 2, axis=-1))

    def gradients(self, x, r, u):
        x = np.asarray(x, dtype=np.float64)
        u = np.asarray(u, dtype=np.float64)
        err = x[..., self.output_index] - np.asarray(r, dtype=np.float64)
        lx = 2.0 * self.state_weights * x
        lx = np.array(np.broadcast_to(lx, np.broadcast_shapes(lx.shape, err.shape + (self.n,))))
        lx[..., self.output_index] += 2.0 * self.tracking_weight * err
        lu = 2.0 * self.control_weight * u
        return lx, lu

    def quadratic_form(self, m: int):
        """(C, Q, R, S) with l = (Cx - r)^T Q (Cx - r) + u^T R u + x^T S x."""
        C = np.zeros((1, self.n))
        C[0, self.output_index] = 1.0
        return C, np.array([[self.tracking_weight]]), self.control_weight * np.eye(m), np.diag(self.state_weights)

    def describe(self) -> Dict:
        return {
            "kind": "quadratic_tracking",
            "output_index": self.output_index,
            "tracking_weight": self.tracking_weight,
            "control_weight": self.control_weight,
            "state_weights": self.state_weights.tolist(),
        }


class ZeroUtility(UtilityFunction):
    def __init__(self, n: int, output_index: int = 0):
        self.n = int(n)
        self.output_index = output_index

    def evaluate(self, x, r, u):
        x = np.asarray(x, dtype=np.float64)
        u = np.asarray(u, dtype=np.float64)
        return np.zeros(np.broadcast_shapes(x.shape[:-1], u.shape[:-1], np.shape(r)))

    def gradients(self, x, r, u):
        return np.zeros_like(np.asarray(x, dtype=np.float64)), np.zeros_like(np.asarray(u, dtype=np.float64))

    def describe(self) -> Dict:
        return {"kind": "zero", "n": self.n}
