import json
from dataclasses import replace
from types import SimpleNamespace

import numpy as np
import pytest
import torch

from rmpc.callbacks import ConvergenceMonitor
from rmpc.datamodules import SamplerSpec
from rmpc.dynamics import LinearModel
from rmpc.errors import ContractViolation, TrainingAbortedError
from rmpc.models.checkpoint import load_checkpoint
from rmpc.models.components import PolicySpec, RecurrentPolicy
from rmpc.models.fitting import TrainingHistory, TrainingOptions, fit_policy
from rmpc.models.rmpc_module import RmpcLitModule
from rmpc.rollout import QuadraticTrackingUtility
from rmpc.tasks import train
from rmpc.utils import derive_seed


@pytest.fixture
def training():
    sampler = SamplerSpec(state_low=(-1.0, -1.0), state_high=(1.0, 1.0), horizon=3, step_length=0.05)
    return TrainingOptions(sampler=sampler, n_max=3, learning_rate=1e-2, batch_size=4, max_iterations=5,
                           eval_every=2, epsilon=0.0, ema_window=100)


def test_zero_iterations_return_the_initial_policy(training, double_integrator, lq_utility, small_spec):
    options = replace(training, max_iterations=0)
    policy, history = fit_policy(options, double_integrator, lq_utility, small_spec, seed=3)
    assert len(history) == 0
    assert torch.equal(policy.flat_parameters(), RecurrentPolicy(small_spec, seed=derive_seed(3, "init"))
                       .flat_parameters())


def test_short_run(tmp_path, training, double_integrator, lq_utility, small_spec):
    initial = RecurrentPolicy(small_spec, seed=derive_seed(0, "init")).flat_parameters()
    policy, history = fit_policy(training, double_integrator, lq_utility, small_spec, seed=0, output_dir=tmp_path)

    assert 1 <= len(history) <= training.max_iterations
    assert history.iterations == sorted(set(history.iterations))
    assert history.iterations[0] == 1
    assert all(np.isfinite(history.objective))
    assert not torch.equal(policy.flat_parameters(), initial)

    lines = (tmp_path / "history.jsonl").read_text().splitlines()
    assert len(lines) == len(history)
    assert set(json.loads(lines[0])) == {"iteration", "J", "smoothed_J", "grad_norm", "clip_active", "excluded"}

    final = tmp_path / "checkpoints" / "policy.rmpc"
    assert final.is_file()
    restored, metadata = load_checkpoint(final)
    assert torch.equal(restored.flat_parameters(), policy.flat_parameters())
    assert metadata["iteration"] == history.iterations[-1]
    assert (tmp_path / "checkpoints" / "policy_0000002.rmpc").is_file()


def test_training_is_deterministic(tmp_path, training, double_integrator, lq_utility, small_spec):
    first, history_a = fit_policy(training, double_integrator, lq_utility, small_spec, seed=5,
                                  output_dir=tmp_path / "a")
    second, history_b = fit_policy(training, double_integrator, lq_utility, small_spec, seed=5,
                                   output_dir=tmp_path / "b")
    assert history_a.objective == history_b.objective
    assert torch.equal(first.flat_parameters(), second.flat_parameters())
    assert (tmp_path / "a" / "history.jsonl").read_bytes() == (tmp_path / "b" / "history.jsonl").read_bytes()


def test_error_monitor_is_called(training, double_integrator, lq_utility, small_spec):
    calls = []

    def monitor(policy, instances):
        calls.append(len(instances))
        return {1: 0.5, 3: 0.25}

    _, history = fit_policy(training, double_integrator, lq_utility, small_spec, seed=0, error_monitor=monitor)
    assert calls and all(n == training.eval_instances for n in calls)
    assert all(it % training.eval_every == 0 for it in history.policy_error)
    assert history.policy_error[2] == {1: 0.5, 3: 0.25}


def test_convergence_monitor_stops_on_a_flat_objective():
    monitor = ConvergenceMonitor(epsilon=0.0, window=3)
    trainer = SimpleNamespace(should_stop=False)
    for iteration in range(1, 4):
        module = SimpleNamespace(last_record={"iteration": iteration, "J": 2.0})
        monitor.on_train_batch_end(trainer, module, None, None, iteration)
        assert module.last_record["smoothed_J"] == 2.0
    assert monitor.converged and trainer.should_stop


def test_convergence_monitor_waits_for_a_full_window():
    monitor = ConvergenceMonitor(epsilon=1.0, window=10)
    trainer = SimpleNamespace(should_stop=False)
    for iteration in range(1, 10):
        monitor.on_train_batch_end(trainer, SimpleNamespace(last_record={"iteration": iteration, "J": 1.0}),
                                   None, None, iteration)
    assert not trainer.should_stop
    monitor.on_train_batch_end(trainer, SimpleNamespace(last_record=None), None, None, 10)
    assert monitor.updates == 9


def test_repeated_failures_abort(double_integrator, lq_utility, small_policy):
    module = RmpcLitModule(small_policy, double_integrator, lq_utility, horizon=3, max_consecutive_failures=2)
    module._fail("diverged")
    module._fail("diverged")
    with pytest.raises(TrainingAbortedError):
        module._fail("diverged")


def test_history_iterations_increase():
    history = TrainingHistory()
    history.append({"iteration": 1, "J": 1.0}, 0.0)
    with pytest.raises(ContractViolation):
        history.append({"iteration": 1, "J": 0.5}, 1.0)


def test_training_options_validation():
    sampler = SamplerSpec(state_low=(0.0,), state_high=(0.0,), horizon=3)
    with pytest.raises(ContractViolation):
        TrainingOptions(sampler=sampler, n_max=4)
    with pytest.raises(ContractViolation):
        TrainingOptions(sampler=sampler, n_max=3, learning_rate=0.0)


def test_policy_dims_must_match_the_model(training, double_integrator, lq_utility):
    spec = PolicySpec(state_dim=4, output_dim=1, output_scale=(1.0,), num_layers=1, hidden_dim=4)
    with pytest.raises(ContractViolation):
        fit_policy(training, double_integrator, lq_utility, spec)


def test_train_task_without_iterations(cfg_lq):
    cfg_lq.training.max_iterations = 0
    metric_dict, object_dict = train(cfg_lq)
    assert metric_dict["iterations"] == 0
    assert object_dict["checkpoint"].is_file()
    manifest = (object_dict["checkpoint"].parents[1] / "manifest.txt").read_text()
    assert "command=train" in manifest and "config_hash=" in manifest


@pytest.mark.slow
def test_train_task(cfg_lq):
    metric_dict, object_dict = train(cfg_lq)
    assert metric_dict["iterations"] == cfg_lq.training.max_iterations
    assert np.isfinite(metric_dict["final_J"])
    out = object_dict["checkpoint"].parents[1]
    assert (out / "history.jsonl").is_file()
    assert (out / "policy_error.jsonl").is_file()
    assert (out / "exec_time.log").is_file()


def test_gradient_descent_settles_on_the_toy_quadratic():
    # x_1 = u_0 with a fixed instance: J = (u_0 - 0.5)^2 is deterministic in theta
    system = LinearModel([[0.0]], [[1.0]], -10.0, 10.0)
    utility = QuadraticTrackingUtility(0, 1.0, 0.0, [0.0])
    sampler = SamplerSpec(state_low=(0.2,), state_high=(0.2,), horizon=1, family="piecewise-constant",
                          track_index=None, levels=(0.5, 0.5), hold=(1, 1))
    options = TrainingOptions(sampler=sampler, n_max=1, learning_rate=0.02, batch_size=2, optimizer="gd",
                              epsilon=0.0, ema_window=10000, max_iterations=300, eval_every=10000,
                              clip_norm=100.0)
    spec = PolicySpec(state_dim=1, output_dim=1, output_scale=(1.0,), cell_kind="plain-rnn", num_layers=1,
                      hidden_dim=1, activation="identity", squash=False)

    policy, history = fit_policy(options, system, utility, spec, seed=2)

    assert len(history) == options.max_iterations
    assert np.all(np.diff(history.objective) <= 1e-15)
    u, _ = policy(torch.tensor([0.2]), torch.tensor([0.5]), 1)
    assert abs(float(u[..., 0, 0]) - 0.5) < 1e-3
