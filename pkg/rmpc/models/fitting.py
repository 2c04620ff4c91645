from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple, Union

import pytorch_lightning as pl
from pytorch_lightning import Callback, Trainer

from rmpc.callbacks import ConvergenceMonitor, HistoryWriter, PolicyCheckpoint, PolicyErrorMonitor
from rmpc.datamodules import InstanceDataModule, SamplerSpec
from rmpc.dynamics import SystemModel
from rmpc.errors import ContractViolation
from rmpc.rollout import UtilityFunction
from rmpc.utils import derive_seed, get_pylogger

from .components.recurrent_policy import PolicySpec, RecurrentPolicy
from .rmpc_module import RmpcLitModule

log = get_pylogger(__name__)


@dataclass(frozen=True)
class TrainingOptions:
    """Hyperparameters of one training run."""

    sampler: SamplerSpec
    n_max: int = 15
    learning_rate: float = 2e-4
    batch_size: int = 256
    optimizer: str = "adam"
    epsilon: float = 1e-4
    ema_window: int = 100
    max_iterations: int = 100000
    eval_every: int = 1000
    clip_norm: float = 10.0
    max_consecutive_failures: int = 10
    eval_instances: int = 16

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ContractViolation("learning_rate must be > 0")
        if self.epsilon < 0:
            raise ContractViolation("epsilon must be >= 0")
        if self.batch_size < 1:
            raise ContractViolation("batch_size must be >= 1")
        if self.sampler.horizon != self.n_max:
            raise ContractViolation(f"sampler horizon {self.sampler.horizon} differs from n_max {self.n_max}")


@dataclass
class TrainingHistory:
    records: List[Dict] = field(default_factory=list)
    wall_ms: List[float] = field(default_factory=list)
    policy_error: Dict[int, Dict[int, float]] = field(default_factory=dict)
    checkpoints: List[Dict] = field(default_factory=list)
    converged: bool = False

    def append(self, record: Dict, wall_ms: float) -> None:
        if self.records and record["iteration"] <= self.records[-1]["iteration"]:
            raise ContractViolation(f"history iteration {record['iteration']} is not increasing")
        self.records.append(dict(record))
        self.wall_ms.append(wall_ms)

    @property
    def iterations(self) -> List[int]:
        return [r["iteration"] for r in self.records]

    @property
    def objective(self) -> List[float]:
        return [r["J"] for r in self.records]

    def __len__(self) -> int:
        return len(self.records)


def fit_policy(
    training: TrainingOptions,
    system: SystemModel,
    utility: UtilityFunction,
    policy: Union[RecurrentPolicy, PolicySpec],
    seed: int = 0,
    output_dir: Optional[Union[str, Path]] = None,
    error_monitor: Optional[Callable] = None,
    checkpoint_metadata: Optional[Dict] = None,
    callbacks: Optional[List[Callback]] = None,
) -> Tuple[RecurrentPolicy, TrainingHistory]:
    """Runs the sample -> objective -> update loop until convergence or `max_iterations`.

    `policy` is either an initialized policy (trained in place) or an architecture,
    initialized from the `init` stream of `seed`.
    """
    if isinstance(policy, PolicySpec):
        policy = RecurrentPolicy(policy, seed=derive_seed(seed, "init"))
    if policy.spec.state_dim != system.n or policy.spec.output_dim != system.m:
        raise ContractViolation("policy dims do not match the model")
    history = TrainingHistory()
    if training.max_iterations == 0:
        log.info("max_iterations=0, returning the initial policy")
        return policy, history

    pl.seed_everything(seed, workers=True)

    datamodule = InstanceDataModule(training.sampler, batch_size=training.batch_size, seed=seed,
                                    eval_instances=training.eval_instances)
    module = RmpcLitModule(
        policy=policy,
        system=system,
        utility=utility,
        horizon=training.n_max,
        optimizer=training.optimizer,
        lr=training.learning_rate,
        clip_norm=training.clip_norm,
        max_consecutive_failures=training.max_consecutive_failures,
    )

    monitor = ConvergenceMonitor(epsilon=training.epsilon, window=training.ema_window)
    all_callbacks: List[Callback] = [monitor, HistoryWriter(history, output_dir)]
    if output_dir is not None:
        all_callbacks.append(PolicyCheckpoint(history, Path(output_dir, "checkpoints"), every=training.eval_every,
                                              metadata=checkpoint_metadata))
    if error_monitor is not None:
        datamodule.setup()
        all_callbacks.append(PolicyErrorMonitor(history, error_monitor, datamodule.eval_set(),
                                              every=training.eval_every, output_dir=output_dir))
    all_callbacks.extend(callbacks or [])

    log.info(f"Instantiating trainer <max_steps={training.max_iterations}, optimizer={training.optimizer}>")
    trainer = Trainer(
        max_steps=training.max_iterations,
        max_epochs=-1,
        accelerator="cpu",
        devices=1,
        precision="64-true",
        logger=False,
        callbacks=all_callbacks,
        enable_checkpointing=False,
        enable_progress_bar=False,
        enable_model_summary=False,
        deterministic=True,
        num_sanity_val_steps=0,
        limit_val_batches=0,
        default_root_dir=str(output_dir) if output_dir is not None else None,
    )

    log.info("Starting training!")
    trainer.fit(model=module, datamodule=datamodule)

    history.converged = monitor.converged
    log.info(f"Training finished <iterations={trainer.global_step}, converged={history.converged}, "
             f"skipped={module.failures}>")
    return policy, history
