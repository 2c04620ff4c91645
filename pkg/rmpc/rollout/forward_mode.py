"""Literal forward accumulation of the rollout gradient.

Carries phi_i = dx_i/dtheta (n x |theta|) and psi_i (m x |theta|) explicitly:

    psi_i = dpi/dx phi_{i-1} + dpi/dtheta
    phi_i = df/dx phi_{i-1} + df/du psi_i
    dV/dtheta = sum_i dl/dx phi_i + dl/du psi_i

Memory grows with |theta|, so this is only meant as an independent check of the
reverse-mode gradient on small policies.
"""
from typing import Tuple

import numpy as np
import torch
from torch.func import functional_call, jacfwd

from rmpc.dynamics import SystemModel
from rmpc.errors import ContractViolation, DivergedRolloutError, NonFiniteGradientError
from rmpc.models.components import RecurrentPolicy

from .instance import MpcInstance
from .utility import UtilityFunction

MAX_FORWARD_PARAMETERS = 200


def _policy_jacobians(policy: RecurrentPolicy, x: np.ndarray, r: np.ndarray, cycles: int):
    names = [name for name, _ in policy.named_parameters()]
    params = {name: p.detach() for name, p in policy.named_parameters()}

    def control(p, state):
        outputs, _ = functional_call(policy, p, (state, torch.from_numpy(r), cycles))
        return outputs[-1]

    state = torch.from_numpy(np.asarray(x, dtype=np.float64).copy())
    with torch.no_grad():
        u = control(params, state)
    d_theta, d_x = jacfwd(control, argnums=(0, 1))(params, state)
    m = u.shape[0]
    d_theta = torch.cat([d_theta[name].reshape(m, -1) for name in names], dim=1)
    return u.numpy().copy(), d_x.numpy().copy(), d_theta.numpy().copy()


def rollout_grad_forward(model: SystemModel, utility: UtilityFunction, policy: RecurrentPolicy,
                         inst: MpcInstance) -> Tuple[float, np.ndarray]:
    """(V, dV/dtheta) from the explicit phi/psi sensitivity recursion."""
    size = policy.num_parameters
    if size > MAX_FORWARD_PARAMETERS:
        raise ContractViolation(
            f"forward-mode gradient limited to {MAX_FORWARD_PARAMETERS} parameters, policy has {size}")
    horizon = inst.horizon
    x = inst.x0.copy()
    phi = np.zeros((model.n, size))
    cost = 0.0
    grad = np.zeros(size)
    for i in range(1, horizon + 1):
        u, du_dx, du_dtheta = _policy_jacobians(policy, x, inst.r[i - 1:horizon], horizon - i + 1)
        psi = du_dx @ phi + du_dtheta
        dfdx, dfdu = model.jacobians(x, u)
        x_next = model.step(x, u, check=False)
        if not bool(model.in_envelope(x_next)):
            raise DivergedRolloutError(i)
        phi = dfdx @ phi + dfdu @ psi
        lx, lu = utility.gradients(x_next, inst.r[i - 1], u)
        cost += float(utility.evaluate(x_next, inst.r[i - 1], u))
        grad += lx @ phi + lu @ psi
        if not np.all(np.isfinite(phi)):
            raise NonFiniteGradientError(f"phi_{i}")
        if not np.all(np.isfinite(psi)):
            raise NonFiniteGradientError(f"psi_{i}")
        x = x_next
    return cost, grad
