from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import torch

from rmpc.dynamics import SystemModel
from rmpc.errors import ContractViolation, DivergedRolloutError, NonFiniteGradientError
from rmpc.models.components import RecurrentPolicy
from rmpc.utils import get_pylogger

from .autograd import model_step, utility_stage
from .instance import MpcInstance
from .utility import UtilityFunction

log = get_pylogger(__name__)


@dataclass
class RolloutResult:
    """States x_{1:N}, controls u_{0:N-1}, utilities l_{1:N} and their sum V."""

    states: np.ndarray
    controls: np.ndarray
    utilities: np.ndarray
    cost: float
    policy_calls: List[int] = field(default_factory=list)


@dataclass
class BatchTrajectory:
    """Differentiable batched rollout; diverged rows are frozen and contribute zero."""

    states: torch.Tensor        # (B, N, n)
    controls: torch.Tensor      # (B, N, m)
    utilities: torch.Tensor     # (B, N)
    alive: np.ndarray           # (B,) bool
    diverged_at: np.ndarray     # (B,) step index of divergence, -1 if none
    policy_calls: List[int]


def simulate_batch(model: SystemModel, utility: UtilityFunction, policy: Optional[RecurrentPolicy],
                   x0: torch.Tensor, r: torch.Tensor, horizon: int,
                   controls: Optional[torch.Tensor] = None) -> BatchTrajectory:
    """Rolls out u_{i-1} = pi^{N-i+1}(x_{i-1}, r_{i:N}) for i = 1..N.

    When `controls` (B, N, m) is given the policy is bypassed and the controls are
    applied as they are.
    """
    if policy is None and controls is None:
        raise ContractViolation("either a policy or an explicit control sequence is required")
    if policy is not None and (policy.spec.state_dim != model.n or policy.spec.output_dim != model.m):
        raise ContractViolation(
            f"policy dims (n={policy.spec.state_dim}, m={policy.spec.output_dim}) "
            f"do not match model dims (n={model.n}, m={model.m})")
    batch = x0.shape[0]
    alive = np.ones(batch, dtype=bool)
    diverged_at = np.full(batch, -1, dtype=np.int64)
    states, applied, utilities, calls = [], [], [], []
    x = x0
    for i in range(1, horizon + 1):
        if controls is None:
            cycles = horizon - i + 1
            outputs, _ = policy(x, r[:, i - 1:horizon], cycles)
            u = outputs[:, -1]
            calls.append(cycles)
        else:
            u = controls[:, i - 1]
        x_next = model_step(model, x, u)
        ok = model.in_envelope(x_next.detach().numpy())
        newly = alive & ~ok
        diverged_at[newly] = i
        alive &= ok
        keep = torch.from_numpy(alive)
        x_next = torch.where(keep[:, None], x_next, x.detach())
        stage = utility_stage(utility, x_next, u, r[:, i - 1])
        stage = torch.where(keep, stage, torch.zeros_like(stage))
        states.append(x_next)
        applied.append(u)
        utilities.append(stage)
        x = x_next
    return BatchTrajectory(
        states=torch.stack(states, dim=1),
        controls=torch.stack(applied, dim=1),
        utilities=torch.stack(utilities, dim=1),
        alive=alive,
        diverged_at=diverged_at,
        policy_calls=calls,
    )


def _single(inst: MpcInstance) -> Tuple[torch.Tensor, torch.Tensor]:
    return (torch.from_numpy(inst.x0[None, :].copy()),
            torch.from_numpy(inst.r[None, :inst.horizon].copy()))


def rollout_cost(model: SystemModel, utility: UtilityFunction, policy: Optional[RecurrentPolicy],
                 inst: MpcInstance, controls=None) -> RolloutResult:
    """V(x0, r_{1:N}, N; theta) with its trajectory; `controls` replaces the policy."""
    x0, r = _single(inst)
    injected = None
    if controls is not None:
        injected = torch.as_tensor(np.asarray(controls, dtype=np.float64).reshape(1, inst.horizon, model.m))
    with torch.no_grad():
        traj = simulate_batch(model, utility, policy, x0, r, inst.horizon, injected)
    if not traj.alive[0]:
        raise DivergedRolloutError(int(traj.diverged_at[0]))
    utilities = traj.utilities[0].numpy().copy()
    return RolloutResult(
        states=traj.states[0].numpy().copy(),
        controls=traj.controls[0].numpy().copy(),
        utilities=utilities,
        cost=float(np.sum(utilities)),
        policy_calls=traj.policy_calls,
    )


def parameter_gradient(policy: RecurrentPolicy, objective: torch.Tensor) -> np.ndarray:
    """Flat d(objective)/d(theta); raises on the first non-finite parameter block."""
    params = list(policy.named_parameters())
    grads = torch.autograd.grad(objective, [p for _, p in params], allow_unused=True)
    flat = []
    for (name, p), g in zip(params, grads):
        g = torch.zeros_like(p) if g is None else g
        if not torch.all(torch.isfinite(g)):
            raise NonFiniteGradientError(name)
        flat.append(g.reshape(-1))
    return torch.cat(flat).detach().numpy().copy()


def rollout_grad(model: SystemModel, utility: UtilityFunction, policy: RecurrentPolicy,
                 inst: MpcInstance) -> Tuple[float, np.ndarray]:
    """(V, dV/dtheta) by reverse-mode accumulation through the rollout."""
    x0, r = _single(inst)
    traj = simulate_batch(model, utility, policy, x0, r, inst.horizon)
    if not traj.alive[0]:
        raise DivergedRolloutError(int(traj.diverged_at[0]))
    total = traj.utilities.sum()
    return float(total.detach()), parameter_gradient(policy, total)


def simulate_controls(model: SystemModel, utility: UtilityFunction, x0, r, controls,
                      check: bool = True) -> Tuple[np.ndarray, np.ndarray, float]:
    """Plain forward simulation of a control sequence: (states x_{0:N}, utilities l_{1:N}, V)."""
    controls = np.asarray(controls, dtype=np.float64).reshape(-1, model.m)
    r = np.asarray(r, dtype=np.float64)
    states = [np.asarray(x0, dtype=np.float64)]
    utilities = []
    for i, u in enumerate(controls):
        states.append(model.step(states[-1], u, check=check))
        utilities.append(float(utility.evaluate(states[-1], r[i], u)))
    utilities = np.asarray(utilities)
    return np.stack(states), utilities, float(np.sum(utilities))


def work_summary(calls: List[int]) -> Dict[str, int]:
    return {"policy_calls": len(calls), "cycles": int(sum(calls))}
