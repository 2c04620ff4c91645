from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from rmpc.dynamics import SystemModel
from rmpc.errors import ContractViolation
from rmpc.rollout import UtilityFunction, simulate_controls

OPTIMAL = "optimal"
MAX_ITERS = "max-iters"
RESTARTS_DISAGREE = "restarts-disagree"
BOUNDS_ACTIVE = "bounds-active"
STATUSES = (OPTIMAL, MAX_ITERS, RESTARTS_DISAGREE, BOUNDS_ACTIVE)

BOUND_TOLERANCE = 1e-12


@dataclass(frozen=True)
class OracleSolution:
    """Optimal control sequence u*_{0:N-1}, states x*_{0:N} and cost V*."""

    controls: np.ndarray
    states: np.ndarray
    cost: float
    status: str
    stats: Dict = field(default_factory=dict, compare=False)

    @property
    def horizon(self) -> int:
        return self.controls.shape[0]

    @property
    def first_control(self) -> np.ndarray:
        return self.controls[0]

    @property
    def is_optimal(self) -> bool:
        return self.status == OPTIMAL

    def to_dict(self) -> Dict:
        # wall-clock fields would make cache files differ between identical runs
        stats = {k: v for k, v in self.stats.items() if k != "wall_ms"}
        return {
            "controls": self.controls.tolist(),
            "states": self.states.tolist(),
            "cost": self.cost,
            "status": self.status,
            "stats": stats,
        }

    @classmethod
    def from_dict(cls, d: Dict) -> "OracleSolution":
        return cls(
            controls=np.asarray(d["controls"], dtype=np.float64),
            states=np.asarray(d["states"], dtype=np.float64),
            cost=float(d["cost"]),
            status=d["status"],
            stats=dict(d.get("stats", {})),
        )


def build_solution(model: SystemModel, utility: UtilityFunction, x0, r, controls, status: str,
                   stats: Dict = None) -> OracleSolution:
    """Re-simulates `controls` through the model so that V* is the cost of what is returned."""
    if status not in STATUSES:
        raise ContractViolation(f"unknown oracle status <{status}>")
    controls = np.asarray(controls, dtype=np.float64).reshape(-1, model.m)
    if np.any(controls < model.u_min - BOUND_TOLERANCE) or np.any(controls > model.u_max + BOUND_TOLERANCE):
        raise ContractViolation("oracle controls leave the control box")
    states, _, cost = simulate_controls(model, utility, x0, r, controls, check=False)
    return OracleSolution(controls=controls, states=states, cost=cost, status=status, stats=dict(stats or {}))
