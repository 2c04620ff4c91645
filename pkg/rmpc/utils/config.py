"""Experiment configuration.

Recipes are YAML files merged onto the structured schema below; struct mode makes
OmegaConf reject unknown keys. Dotted overrides (`training.seed=3`) are applied on
top, then `RMPC_CACHE_DIR` (if set) replaces `paths.cache_dir`.
"""
import hashlib
import json
import math
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import yaml
from omegaconf import DictConfig, OmegaConf
from omegaconf.errors import OmegaConfBaseException

from rmpc.errors import ConfigError

from . import pylogger

log = pylogger.get_pylogger(__name__)

CACHE_DIR_ENV = "RMPC_CACHE_DIR"
OPTIMIZERS = ("gd", "adam")
REFERENCE_FAMILIES = ("sine", "piecewise-constant", "recorded")
ORACLE_SOLVERS = ("auto", "riccati", "shooting", "grid")
# sections that do not change the experiment itself
UNHASHED_KEYS = ("paths", "workers", "log_level", "extras")


@dataclass
class ModelConfig:
    kind: str = "double_integrator"
    params: Dict[str, float] = field(default_factory=dict)


@dataclass
class UtilityConfig:
    output_index: int = 0
    tracking_weight: float = 1.0
    control_weight: float = 0.1
    state_weights: List[float] = field(default_factory=lambda: [0.0, 0.01])


@dataclass
class PolicyConfig:
    cell_kind: str = "gated"
    num_layers: int = 2
    hidden_dim: int = 64
    # defaults to the control bound of the model
    output_scale: Optional[List[float]] = None
    activation: str = "relu"
    squash: bool = True


@dataclass
class SamplerConfig:
    state_low: List[float] = field(default_factory=lambda: [-1.0, -1.0])
    state_high: List[float] = field(default_factory=lambda: [1.0, 1.0])
    # state component sampled relative to r_1; null samples it absolutely
    track_index: Optional[int] = 0
    family: str = "sine"
    amplitude: List[float] = field(default_factory=lambda: [0.0, 1.0])
    wavelength: List[float] = field(default_factory=lambda: [4.0, 16.0])
    phase: List[float] = field(default_factory=lambda: [0.0, 2 * math.pi])
    # distance (or time) travelled per step; null derives it from the model
    step_length: Optional[float] = None
    levels: List[float] = field(default_factory=lambda: [-1.0, 1.0])
    hold: List[int] = field(default_factory=lambda: [2, 10])
    recorded_path: Optional[str] = None


@dataclass
class TrainingConfig:
    n_max: int = 10
    learning_rate: float = 1e-3
    batch_size: int = 256
    optimizer: str = "adam"
    epsilon: float = 1e-4
    ema_window: int = 100
    max_iterations: int = 100000
    eval_every: int = 1000
    clip_norm: float = 10.0
    max_consecutive_failures: int = 10
    eval_instances: int = 16
    sampler: SamplerConfig = field(default_factory=SamplerConfig)


@dataclass
class ScenarioConfig:
    family: str = "sine"
    amplitude: float = 1.0
    wavelength: float = 8.0
    phase: float = 0.0
    steps: int = 200
    x0: Optional[List[float]] = None
    levels: List[float] = field(default_factory=lambda: [-1.0, 1.0])
    hold: int = 40
    recorded_path: Optional[str] = None


@dataclass
class EvalConfig:
    seed_label: str = "eval"
    num_instances: int = 50
    # empty means 1..n_max
    horizons: List[int] = field(default_factory=list)
    cycles: List[int] = field(default_factory=lambda: [1, 3, 5, 7, 10])
    steps: int = 200
    num_starts: int = 50
    budgets: List[float] = field(default_factory=lambda: [0.5, 1.0, 2.0, 4.0, 8.0, 16.0])
    cycle_cost: float = 1.0
    sweeps: Dict[str, List[float]] = field(default_factory=dict)
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    timing_repeats: int = 20
    timing_warmup: int = 3


@dataclass
class OracleConfig:
    solver: str = "auto"
    restarts: int = 5
    iterations: int = 2000
    learning_rate: float = 0.05
    tolerance: float = 1e-5
    polish: bool = True
    grid_step: float = 1e-3
    cache: bool = True


@dataclass
class PathsConfig:
    output_dir: str = "outputs/${name}"
    cache_dir: str = "${paths.output_dir}/oracle_cache"


@dataclass
class ExtrasConfig:
    ignore_warnings: bool = False
    print_config: bool = False


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    seed: int = 0
    # 0 means all available cores
    workers: int = 0
    log_level: str = "INFO"
    model: ModelConfig = field(default_factory=ModelConfig)
    utility: UtilityConfig = field(default_factory=UtilityConfig)
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)
    extras: ExtrasConfig = field(default_factory=ExtrasConfig)


def _locate(text: str, key_path: str) -> Optional[int]:
    """1-based line of `key_path` (dotted) in a YAML text, following nesting order."""
    lines = text.splitlines()
    start = 0
    found = None
    for part in key_path.split("."):
        pattern = re.compile(rf"^\s*{re.escape(part)}\s*:")
        for idx in range(start, len(lines)):
            if pattern.match(lines[idx]):
                found, start = idx, idx + 1
                break
        else:
            return found + 1 if found is not None else None
    return found + 1 if found is not None else None


def _config_error(path: Path, text: str, key: Optional[str], message: str) -> ConfigError:
    where = str(path)
    if key:
        line = _locate(text, key)
        where += f":{line}" if line is not None else ""
        where += f" <{key}>"
    return ConfigError(f"{where}: {message}")


def load_config(path: Union[str, Path], overrides: Sequence[str] = ()) -> DictConfig:
    """Loads and validates a recipe; raises ConfigError naming the file, key and line."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found <{path}>")
    text = path.read_text(encoding="utf-8")
    try:
        raw = yaml.safe_load(text) or {}
    except yaml.YAMLError as ex:
        mark = getattr(ex, "problem_mark", None)
        line = f":{mark.line + 1}" if mark is not None else ""
        raise ConfigError(f"{path}{line}: invalid YAML ({getattr(ex, 'problem', ex)})") from ex
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")

    schema = OmegaConf.structured(ExperimentConfig)
    try:
        cfg = OmegaConf.merge(schema, OmegaConf.create(raw))
    except OmegaConfBaseException as ex:
        raise _config_error(path, text, getattr(ex, "full_key", None), str(ex).splitlines()[0]) from ex
    try:
        if overrides:
            cfg = OmegaConf.merge(cfg, OmegaConf.from_dotlist(list(overrides)))
    except OmegaConfBaseException as ex:
        raise ConfigError(f"override <{getattr(ex, 'full_key', '')}>: {str(ex).splitlines()[0]}") from ex

    if cfg.workers == 0:
        cfg.workers = os.cpu_count() or 1

    env_cache = os.environ.get(CACHE_DIR_ENV)
    if env_cache:
        cfg.paths.cache_dir = env_cache

    _resolve_files(cfg, path.parent)
    problems = validate(cfg)
    if problems:
        key, message = problems[0]
        raise _config_error(path, text, key, message)
    return cfg


def _resolve_files(cfg: DictConfig, base: Path) -> None:
    for section in (cfg.training.sampler, cfg.eval.scenario):
        if section.recorded_path:
            candidate = Path(section.recorded_path)
            if not candidate.is_absolute() and not candidate.exists():
                candidate = base / candidate
            section.recorded_path = str(candidate)


def validate(cfg: DictConfig) -> List[tuple]:
    """Semantic checks the schema types cannot express, as (key, message) pairs."""
    from rmpc.dynamics import MODEL_KINDS

    problems = []

    def check(ok, key, message):
        if not ok:
            problems.append((key, message))

    t = cfg.training
    s = t.sampler
    check(cfg.model.kind in MODEL_KINDS, "model.kind", f"unknown model kind, expected one of {MODEL_KINDS}")
    check(cfg.workers >= 0, "workers", "must be >= 0")
    check(t.learning_rate > 0, "training.learning_rate", "must be > 0")
    check(t.epsilon >= 0, "training.epsilon", "must be >= 0")
    check(t.batch_size >= 1, "training.batch_size", "must be >= 1")
    check(t.n_max >= 1, "training.n_max", "must be >= 1")
    check(t.max_iterations >= 0, "training.max_iterations", "must be >= 0")
    check(t.eval_every >= 1, "training.eval_every", "must be >= 1")
    check(t.ema_window >= 1, "training.ema_window", "must be >= 1")
    check(t.optimizer in OPTIMIZERS, "training.optimizer", f"expected one of {OPTIMIZERS}")
    check(len(s.state_low) == len(s.state_high)
          and all(lo <= hi for lo, hi in zip(s.state_low, s.state_high)),
          "training.sampler.state_low", "state box bounds must pair up with low <= high")
    check(s.family in REFERENCE_FAMILIES, "training.sampler.family", f"expected one of {REFERENCE_FAMILIES}")
    for key in ("amplitude", "wavelength", "phase", "levels", "hold"):
        bounds = s[key]
        check(len(bounds) == 2 and bounds[0] <= bounds[1], f"training.sampler.{key}", "expected [low, high]")
    check(s.wavelength[0] > 0, "training.sampler.wavelength", "must be > 0")
    check(s.hold[0] >= 1, "training.sampler.hold", "must be >= 1")
    check(cfg.eval.scenario.family in REFERENCE_FAMILIES, "eval.scenario.family",
          f"expected one of {REFERENCE_FAMILIES}")
    check(cfg.eval.scenario.steps >= 0, "eval.scenario.steps", "must be >= 0")
    check(all(1 <= n <= t.n_max for n in cfg.eval.horizons), "eval.horizons", "must lie in [1, n_max]")
    check(all(1 <= c <= t.n_max for c in cfg.eval.cycles), "eval.cycles", "must lie in [1, n_max]")
    check(list(cfg.eval.budgets) == sorted(cfg.eval.budgets), "eval.budgets", "must be sorted ascending")
    check(cfg.oracle.solver in ORACLE_SOLVERS, "oracle.solver", f"expected one of {ORACLE_SOLVERS}")
    check(cfg.oracle.restarts >= 1, "oracle.restarts", "must be >= 1")
    check(cfg.oracle.grid_step > 0, "oracle.grid_step", "must be > 0")
    for section, key in ((s, "training.sampler"), (cfg.eval.scenario, "eval.scenario")):
        if section.family == "recorded":
            check(bool(section.recorded_path) and Path(section.recorded_path).is_file(),
                  f"{key}.recorded_path", f"recorded reference file not found <{section.recorded_path}>")
    return problems


def to_container(cfg: DictConfig) -> Dict:
    return OmegaConf.to_container(cfg, resolve=True)


def save_config(cfg: DictConfig, path: Union[str, Path]) -> Path:
    """Writes the resolved config; loading it back yields the same values."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(to_container(cfg), f, sort_keys=True, default_flow_style=False)
    return path


def config_hash(cfg: DictConfig) -> str:
    """sha256 over the experiment-defining part of the resolved config."""
    content = {k: v for k, v in to_container(cfg).items() if k not in UNHASHED_KEYS}
    return hashlib.sha256(json.dumps(content, sort_keys=True).encode("utf-8")).hexdigest()
