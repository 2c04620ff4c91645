import numpy as np
import pytest
import torch

from rmpc.models.optim import AdamState, BiasCorrectedAdam, GradientDescent, adam_step, build_optimizer, gd_step


def test_gradient_descent_step():
    theta = np.array([1.0, 2.0])
    np.testing.assert_allclose(gd_step(theta, np.array([0.5, -1.0]), 0.1), [0.95, 2.1])


def test_gradient_descent_keeps_parameters_on_non_finite_gradient():
    theta = np.array([1.0, 2.0])
    assert gd_step(theta, np.array([np.nan, 0.0]), 0.1) is theta


def test_first_adam_step_moves_by_the_learning_rate():
    theta = np.array([1.0, -1.0, 0.5])
    g = np.array([3.0, -0.01, 200.0])
    state, updated = adam_step(AdamState.zeros_like(theta), theta, g, 0.05)
    assert state.t == 1
    np.testing.assert_allclose(updated, theta - 0.05 * np.sign(g), atol=1e-6)


def test_adam_moments():
    theta = np.zeros(1)
    state = AdamState.zeros_like(theta)
    state, theta = adam_step(state, theta, np.array([1.0]), 0.1)
    state, theta = adam_step(state, theta, np.array([2.0]), 0.1)
    np.testing.assert_allclose(state.m, [0.9 * 0.1 + 0.1 * 2.0])
    np.testing.assert_allclose(state.v, [0.999 * 0.001 + 0.001 * 4.0])
    assert state.t == 2


def test_adam_skips_non_finite_gradient():
    theta = np.ones(2)
    state = AdamState.zeros_like(theta)
    new_state, new_theta = adam_step(state, theta, np.array([np.inf, 1.0]), 0.1)
    assert new_state is state
    assert new_theta is theta


def test_torch_adam_applies_the_pure_step():
    p = torch.nn.Parameter(torch.tensor([1.0, -2.0], dtype=torch.float64))
    opt = BiasCorrectedAdam([p], lr=0.01)
    p.grad = torch.tensor([0.5, 0.25], dtype=torch.float64)
    opt.step()
    _, expected = adam_step(AdamState.zeros_like(np.array([1.0, -2.0])), np.array([1.0, -2.0]),
                            np.array([0.5, 0.25]), 0.01)
    np.testing.assert_allclose(p.detach().numpy(), expected, rtol=1e-14)
    assert not opt.skipped


def test_torch_optimizer_skips_the_whole_update_on_non_finite_gradient():
    a = torch.nn.Parameter(torch.ones(2, dtype=torch.float64))
    b = torch.nn.Parameter(torch.ones(3, dtype=torch.float64))
    opt = GradientDescent([a, b], lr=0.1)
    a.grad = torch.ones(2, dtype=torch.float64)
    b.grad = torch.tensor([1.0, float("nan"), 1.0], dtype=torch.float64)
    opt.step()
    assert opt.skipped
    assert torch.equal(a.detach(), torch.ones(2, dtype=torch.float64))
    assert torch.equal(b.detach(), torch.ones(3, dtype=torch.float64))


def test_build_optimizer():
    p = [torch.nn.Parameter(torch.zeros(1, dtype=torch.float64))]
    assert isinstance(build_optimizer("gd", p, 0.1), GradientDescent)
    assert isinstance(build_optimizer("adam", p, 0.1), BiasCorrectedAdam)
    with pytest.raises(ValueError):
        build_optimizer("sgd-momentum", p, 0.1)
    with pytest.raises(ValueError):
        build_optimizer("gd", p, 0.0)
