import copy

import numpy as np
import pyrootutils
import pytest
from omegaconf import DictConfig, open_dict

from rmpc.dynamics import BicycleModel, CubicScalarModel, DoubleIntegrator
from rmpc.models.components import PolicySpec, RecurrentPolicy
from rmpc.rollout import MpcInstance, QuadraticTrackingUtility
from rmpc.utils.config import load_config

ROOT = pyrootutils.find_root(search_from=__file__, indicator="setup.py")

# shrinks the shipped recipe to something a test can train and evaluate in seconds
FAST_OVERRIDES = [
    "workers=1",
    "training.n_max=4",
    "training.batch_size=8",
    "training.max_iterations=3",
    "training.eval_every=2",
    "training.eval_instances=4",
    "policy.num_layers=1",
    "policy.hidden_dim=8",
    "eval.num_instances=4",
    "eval.cycles=[1,2,4]",
    "eval.num_starts=2",
    "eval.steps=10",
    "eval.budgets=[0.5,2.0]",
    "eval.scenario.steps=10",
    "eval.timing_repeats=3",
    "eval.timing_warmup=1",
    "oracle.restarts=2",
    "oracle.iterations=200",
]


@pytest.fixture(scope="package")
def cfg_lq_global() -> DictConfig:
    return load_config(ROOT / "configs" / "lq.yaml", FAST_OVERRIDES)


# each test gets its own output directory
@pytest.fixture(scope="function")
def cfg_lq(cfg_lq_global, tmp_path, monkeypatch) -> DictConfig:
    monkeypatch.delenv("RMPC_CACHE_DIR", raising=False)
    cfg = copy.deepcopy(cfg_lq_global)
    with open_dict(cfg):
        cfg.paths.output_dir = str(tmp_path)
        cfg.paths.cache_dir = str(tmp_path / "oracle_cache")
    return cfg


@pytest.fixture
def double_integrator() -> DoubleIntegrator:
    return DoubleIntegrator(dt=0.05, u_bound=1.0)


@pytest.fixture
def wide_integrator() -> DoubleIntegrator:
    """Control bounds far from anything the test instances need."""
    return DoubleIntegrator(dt=0.05, u_bound=10.0)


@pytest.fixture
def scalar_cubic() -> CubicScalarModel:
    return CubicScalarModel(dt=0.1, u_bound=1.0)


@pytest.fixture
def bicycle() -> BicycleModel:
    return BicycleModel()


@pytest.fixture
def lq_utility() -> QuadraticTrackingUtility:
    return QuadraticTrackingUtility(0, 1.0, 0.1, [0.0, 0.01])


@pytest.fixture
def scalar_utility() -> QuadraticTrackingUtility:
    return QuadraticTrackingUtility(0, 1.0, 0.1, [0.0])


@pytest.fixture
def bicycle_utility() -> QuadraticTrackingUtility:
    return QuadraticTrackingUtility(0, 1.0, 10.0, [0.0, 0.0, 0.0, 1.0])


@pytest.fixture
def small_spec() -> PolicySpec:
    return PolicySpec(state_dim=2, output_dim=1, output_scale=(1.0,), num_layers=1, hidden_dim=4)


@pytest.fixture
def small_policy(small_spec) -> RecurrentPolicy:
    return RecurrentPolicy(small_spec, seed=7)


@pytest.fixture
def lq_instance() -> MpcInstance:
    return MpcInstance(x0=np.array([0.2, -0.1]), r=np.array([0.1, 0.15, 0.2, 0.25, 0.3]), horizon=5)
