"""Autograd bridges for numpy models and utilities.

Reverse-mode passes through these functions use the analytic Jacobians, so the
gradient of a rollout is the adjoint of the sensitivity recursion
phi_i = df/dx phi_{i-1} + df/du psi_i.
"""
import numpy as np
import torch

from rmpc.dynamics import SystemModel

from .utility import UtilityFunction


def _np(t: torch.Tensor) -> np.ndarray:
    return t.detach().cpu().numpy()


class _ModelStep(torch.autograd.Function):
    @staticmethod
    def forward(ctx, x, u, model):
        ctx.model = model
        ctx.save_for_backward(x, u)
        return torch.from_numpy(np.asarray(model.step(_np(x), _np(u), check=False), dtype=np.float64))

    @staticmethod
    def backward(ctx, grad_out):
        x, u = ctx.saved_tensors
        dfdx, dfdu = ctx.model.jacobians(_np(x), _np(u))
        g = _np(grad_out)
        # rows frozen after divergence receive a zero cotangent; keep them exactly zero
        idle = ~np.any(g != 0.0, axis=-1)
        if np.any(idle):
            dfdx = np.where(idle[..., None, None], 0.0, dfdx)
            dfdu = np.where(idle[..., None, None], 0.0, dfdu)
        grad_x = np.einsum("...i,...ij->...j", g, dfdx)
        grad_u = np.einsum("...i,...ij->...j", g, dfdu)
        return torch.from_numpy(grad_x), torch.from_numpy(grad_u), None


class _UtilityStage(torch.autograd.Function):
    @staticmethod
    def forward(ctx, x, u, r, utility):
        ctx.utility = utility
        ctx.save_for_backward(x, u, r)
        return torch.from_numpy(np.asarray(utility.evaluate(_np(x), _np(r), _np(u)), dtype=np.float64))

    @staticmethod
    def backward(ctx, grad_out):
        x, u, r = ctx.saved_tensors
        lx, lu = ctx.utility.gradients(_np(x), _np(r), _np(u))
        g = _np(grad_out)[..., None]
        return torch.from_numpy(g * lx), torch.from_numpy(g * lu), None, None


def model_step(model: SystemModel, x: torch.Tensor, u: torch.Tensor) -> torch.Tensor:
    return _ModelStep.apply(x, u, model)


def utility_stage(utility: UtilityFunction, x: torch.Tensor, u: torch.Tensor, r: torch.Tensor) -> torch.Tensor:
    return _UtilityStage.apply(x, u, r, utility)
