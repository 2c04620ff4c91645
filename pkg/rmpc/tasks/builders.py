"""Builds the runtime objects of an experiment from its configuration."""
from pathlib import Path
from typing import List, Optional

import numpy as np
from omegaconf import DictConfig

from rmpc.datamodules.components import SamplerSpec, load_recorded_reference, sample_batch, scenario_reference
from rmpc.dynamics import SystemModel, build_model
from rmpc.errors import ConfigError, ContractViolation
from rmpc.evaluation import ClosedLoopStart
from rmpc.models.components import PolicySpec
from rmpc.models.fitting import TrainingOptions
from rmpc.oracle import MpcOracle, OracleCache, OracleOptions
from rmpc.rollout import MpcInstance, QuadraticTrackingUtility
from rmpc.utils import component_rng, derive_seed, get_pylogger

log = get_pylogger(__name__)


def build_system(cfg: DictConfig) -> SystemModel:
    log.info(f"Instantiating model <{cfg.model.kind}>")
    try:
        return build_model(cfg.model.kind, dict(cfg.model.params))
    except ContractViolation as ex:
        raise ConfigError(f"model: {ex}") from ex


def build_utility(cfg: DictConfig, model: SystemModel) -> QuadraticTrackingUtility:
    u = cfg.utility
    if len(u.state_weights) != model.n:
        raise ConfigError(f"utility.state_weights has {len(u.state_weights)} entries, model state has {model.n}")
    try:
        return QuadraticTrackingUtility(u.output_index, u.tracking_weight, u.control_weight, list(u.state_weights))
    except ContractViolation as ex:
        raise ConfigError(f"utility: {ex}") from ex


def build_policy_spec(cfg: DictConfig, model: SystemModel) -> PolicySpec:
    p = cfg.policy
    scale = p.output_scale
    if scale is None:
        scale = np.maximum(np.abs(model.u_min), np.abs(model.u_max)).tolist()
    try:
        return PolicySpec(state_dim=model.n, output_dim=model.m, output_scale=tuple(scale),
                          cell_kind=p.cell_kind, num_layers=p.num_layers, hidden_dim=p.hidden_dim,
                          activation=p.activation, squash=p.squash)
    except ContractViolation as ex:
        raise ConfigError(f"policy: {ex}") from ex


def default_step_length(model: SystemModel) -> float:
    """Reference advance per control step: distance for the bicycle, time otherwise."""
    frequency = model.step_frequency or 1.0
    speed = model.parameters().get("vx")
    return float(speed) / frequency if speed is not None else 1.0 / frequency


def _recorded(path: Optional[str]) -> Optional[np.ndarray]:
    return load_recorded_reference(path) if path else None


def build_sampler(cfg: DictConfig, model: SystemModel) -> SamplerSpec:
    s = cfg.training.sampler
    if len(s.state_low) != model.n:
        raise ConfigError(f"training.sampler.state_low has {len(s.state_low)} entries, model state has {model.n}")
    try:
        return SamplerSpec(
            state_low=tuple(s.state_low),
            state_high=tuple(s.state_high),
            horizon=cfg.training.n_max,
            family=s.family,
            track_index=s.track_index,
            amplitude=tuple(s.amplitude),
            wavelength=tuple(s.wavelength),
            phase=tuple(s.phase),
            step_length=s.step_length if s.step_length is not None else default_step_length(model),
            levels=tuple(s.levels),
            hold=tuple(s.hold),
            recorded=_recorded(s.recorded_path) if s.family == "recorded" else None,
        )
    except ContractViolation as ex:
        raise ConfigError(f"training.sampler: {ex}") from ex


def build_training(cfg: DictConfig, model: SystemModel) -> TrainingOptions:
    t = cfg.training
    return TrainingOptions(
        sampler=build_sampler(cfg, model),
        n_max=t.n_max,
        learning_rate=t.learning_rate,
        batch_size=t.batch_size,
        optimizer=t.optimizer,
        epsilon=t.epsilon,
        ema_window=t.ema_window,
        max_iterations=t.max_iterations,
        eval_every=t.eval_every,
        clip_norm=t.clip_norm,
        max_consecutive_failures=t.max_consecutive_failures,
        eval_instances=t.eval_instances,
    )


def build_oracle(cfg: DictConfig, model: SystemModel, utility, use_cache: bool = True) -> MpcOracle:
    o = cfg.oracle
    options = OracleOptions(solver=o.solver, restarts=o.restarts, iterations=o.iterations,
                            learning_rate=o.learning_rate, tolerance=o.tolerance, polish=o.polish,
                            grid_step=o.grid_step, seed=derive_seed(cfg.seed, "oracle"), workers=cfg.workers)
    cache = OracleCache(Path(cfg.paths.cache_dir)) if (use_cache and o.cache) else None
    return MpcOracle(model, utility, options, cache)


def eval_instances(cfg: DictConfig, sampler: SamplerSpec) -> List[MpcInstance]:
    rng = component_rng(cfg.seed, cfg.eval.seed_label)
    return sample_batch(sampler, rng, cfg.eval.num_instances)


def eval_horizons(cfg: DictConfig) -> List[int]:
    return list(cfg.eval.horizons) or list(range(1, cfg.training.n_max + 1))


def scenario_stream(cfg: DictConfig, model: SystemModel, steps: Optional[int] = None) -> np.ndarray:
    sc = cfg.eval.scenario
    steps = sc.steps if steps is None else steps
    return scenario_reference(sc.family, steps + cfg.training.n_max, default_step_length(model),
                              amplitude=sc.amplitude, wavelength=sc.wavelength, phase=sc.phase,
                              levels=list(sc.levels), hold=sc.hold,
                              recorded=_recorded(sc.recorded_path) if sc.family == "recorded" else None)


def build_scenario(cfg: DictConfig, model: SystemModel, steps: Optional[int] = None) -> ClosedLoopStart:
    sc = cfg.eval.scenario
    x0 = np.zeros(model.n) if sc.x0 is None else np.asarray(sc.x0, dtype=np.float64)
    if x0.shape != (model.n,):
        raise ConfigError(f"eval.scenario.x0 has {x0.size} entries, model state has {model.n}")
    return ClosedLoopStart(x0, scenario_stream(cfg, model, steps))
