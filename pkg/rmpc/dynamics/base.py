from abc import ABC, abstractmethod
from typing import Dict, Optional, Tuple

import numpy as np

from rmpc.errors import ContractViolation, NumericDomainError


class SystemModel(ABC):
    """Discrete-time system x_{i+1} = f(x_i, u_i) with analytic Jacobians.

    All methods accept a single point (x of shape (n,), u of shape (m,)) or a batch
    (x of shape (..., n), u of shape (..., m)) and broadcast over the leading axes.
    Instances are immutable after construction.
    """

    name: str = "system"
    is_linear: bool = False

    def __init__(self, n: int, m: int, u_min, u_max, step_frequency: Optional[float] = None):
        self.n = int(n)
        self.m = int(m)
        self.u_min = np.broadcast_to(np.asarray(u_min, dtype=np.float64), (self.m,)).copy()
        self.u_max = np.broadcast_to(np.asarray(u_max, dtype=np.float64), (self.m,)).copy()
        if np.any(self.u_min >= self.u_max):
            raise ContractViolation(f"empty control box <u_min={self.u_min}, u_max={self.u_max}>")
        self.step_frequency = step_frequency

    # -- parameters --------------------------------------------------------------------------

    @abstractmethod
    def parameters(self) -> Dict[str, float]:
        """Named real parameters; together with `name` they identify the model."""

    @abstractmethod
    def with_params(self, **overrides) -> "SystemModel":
        """Returns a copy with some parameters replaced."""

    def describe(self) -> Dict:
        return {
            "name": self.name,
            "params": {k: float(v) for k, v in sorted(self.parameters().items())},
            "u_min": self.u_min.tolist(),
            "u_max": self.u_max.tolist(),
        }

    # -- dynamics ----------------------------------------------------------------------------

    @abstractmethod
    def _step(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def _jacobians(self, x: np.ndarray, u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        ...

    def step(self, x, u, check: bool = True) -> np.ndarray:
        x, u = self._coerce(x, u)
        x_next = self._step(x, u)
        if check and not np.all(np.isfinite(x_next)):
            raise NumericDomainError("x_next", f"in {self.name} step")
        return x_next

    def jacobians(self, x, u) -> Tuple[np.ndarray, np.ndarray]:
        x, u = self._coerce(x, u)
        return self._jacobians(x, u)

    def saturate(self, u) -> np.ndarray:
        return np.clip(np.asarray(u, dtype=np.float64), self.u_min, self.u_max)

    def in_envelope(self, x) -> np.ndarray:
        """Validity envelope used to abort diverging rollouts; finite states by default."""
        x = np.asarray(x, dtype=np.float64)
        return np.all(np.isfinite(x), axis=-1)

    def sampling_box(self) -> Tuple[np.ndarray, np.ndarray]:
        """Region used for derivative checks and default instance sampling."""
        return -np.ones(self.n), np.ones(self.n)

    def _coerce(self, x, u) -> Tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=np.float64)
        u = np.asarray(u, dtype=np.float64)
        if u.ndim == 0:
            u = u.reshape(1)
        if x.shape[-1:] != (self.n,):
            raise ContractViolation(f"{self.name}: state has shape {x.shape}, expected (..., {self.n})")
        if u.shape[-1:] != (self.m,):
            raise ContractViolation(f"{self.name}: control has shape {u.shape}, expected (..., {self.m})")
        return x, u

    def __repr__(self) -> str:
        params = ", ".join(f"{k}={v:g}" for k, v in sorted(self.parameters().items()))
        return f"{type(self).__name__}({params})"
