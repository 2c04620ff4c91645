from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
import torch

from rmpc.dynamics import SystemModel
from rmpc.errors import BatchFailureError
from rmpc.models.components import RecurrentPolicy
from rmpc.utils import get_pylogger

from .instance import MpcInstance, stack_instances
from .rollout import parameter_gradient, simulate_batch
from .utility import UtilityFunction

log = get_pylogger(__name__)

MAX_EXCLUDED_FRACTION = 0.5


@dataclass
class BatchObjective:
    """Differentiable batch mean J over the instances that stayed inside the envelope."""

    value: torch.Tensor
    per_instance: np.ndarray
    excluded: int
    total: int
    cycles: int


def objective_tensor(model: SystemModel, utility: UtilityFunction, policy: RecurrentPolicy,
                     x0, r, horizon: int) -> BatchObjective:
    """J(theta) as a torch scalar for a stacked batch x0 (B, n), r (B, N).

    Diverged instances are dropped from the mean; more than half dropped is a failed batch.
    """
    x0 = torch.as_tensor(x0, dtype=torch.float64)
    r = torch.as_tensor(r, dtype=torch.float64)
    traj = simulate_batch(model, utility, policy, x0, r, horizon)
    total = x0.shape[0]
    excluded = int(total - traj.alive.sum())
    if excluded:
        log.warning(f"Excluded diverged instances <excluded={excluded}, total={total}, "
                    f"steps={traj.diverged_at[~traj.alive].tolist()}>")
    if excluded > MAX_EXCLUDED_FRACTION * total:
        raise BatchFailureError(excluded, total)
    costs = traj.utilities.sum(dim=1)
    keep = torch.from_numpy(traj.alive)
    value = costs[keep].mean()
    per_instance = costs.detach().numpy().copy()
    per_instance[~traj.alive] = np.nan
    return BatchObjective(value=value, per_instance=per_instance, excluded=excluded, total=total,
                          cycles=int(sum(traj.policy_calls)) * total)


def objective_batch(model: SystemModel, utility: UtilityFunction, policy: RecurrentPolicy,
                    batch: Sequence[MpcInstance]) -> Tuple[float, np.ndarray]:
    """(J, dJ/dtheta): mean cost over the batch and the mean of the per-instance gradients."""
    x0, r, horizon = stack_instances(batch)
    objective = objective_tensor(model, utility, policy, x0, r, horizon)
    return float(objective.value.detach()), parameter_gradient(policy, objective.value)
