from pathlib import Path
from typing import Any, Dict, Tuple

from omegaconf import DictConfig

from rmpc.callbacks.policy_checkpoint import FINAL_NAME
from rmpc.evaluation import error_monitor
from rmpc.models.checkpoint import save_checkpoint
from rmpc.models.fitting import fit_policy
from rmpc.utils import get_pylogger, task_wrapper
from rmpc.utils.config import config_hash
from rmpc.utils.manifest import file_sha256, write_manifest

from . import builders
from .common import prepare_run

log = get_pylogger(__name__)


@task_wrapper
def train(cfg: DictConfig) -> Tuple[Dict[str, Any], Dict[str, Any]]:
    """Trains the recurrent policy and writes checkpoints, history and manifest.

    This method is wrapped in @task_wrapper decorator which applies extra utilities
    before and after the call.

    Args:
        cfg (DictConfig): Experiment configuration.

    Returns:
        Tuple[dict, dict]: Dict with metrics and dict with all instantiated objects.
    """
    output_dir = prepare_run(cfg, "train")

    system = builders.build_system(cfg)
    utility = builders.build_utility(cfg, system)
    spec = builders.build_policy_spec(cfg, system)
    training = builders.build_training(cfg, system)

    monitor = None
    if cfg.training.max_iterations > 0 and cfg.training.eval_instances > 0:
        oracle = builders.build_oracle(cfg, system, utility)
        monitor = error_monitor(oracle, builders.eval_horizons(cfg))

    metadata = {"config_hash": config_hash(cfg), "seed": int(cfg.seed), "name": cfg.name}
    policy, history = fit_policy(training, system, utility, spec, seed=cfg.seed, output_dir=output_dir,
                                 error_monitor=monitor, checkpoint_metadata=metadata)

    final = Path(output_dir, "checkpoints", FINAL_NAME)
    if not history.records:
        save_checkpoint(policy, final, {**metadata, "iteration": 0})

    write_manifest(output_dir, "train", cfg, {
        "checkpoint": final.relative_to(output_dir).as_posix(),
        "checkpoint_sha256": file_sha256(final),
        "iterations": len(history),
        "converged": history.converged,
    })

    metric_dict = {
        "iterations": len(history),
        "final_J": history.objective[-1] if history.records else float("nan"),
        "converged": history.converged,
    }
    object_dict = {"cfg": cfg, "policy": policy, "history": history, "checkpoint": final}
    return metric_dict, object_dict
