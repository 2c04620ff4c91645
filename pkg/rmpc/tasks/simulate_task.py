from typing import Any, Dict, Optional, Sequence, Tuple

from omegaconf import DictConfig

from rmpc.evaluation import AnytimeController, OracleController, PolicyController, cost_to_go, write_trace
from rmpc.models.anytime import SimulatedClock
from rmpc.utils import get_pylogger, task_wrapper
from rmpc.utils.manifest import file_sha256, write_manifest

from . import builders
from .common import prepare_run
from .eval_task import load_policy, resolve_checkpoint

log = get_pylogger(__name__)


@task_wrapper
def simulate(cfg: DictConfig, checkpoint: Optional[str] = None, cycles: Optional[Sequence[int]] = None,
             steps: Optional[int] = None, budget: Optional[float] = None) -> Tuple[Dict[str, Any], Dict[str, Any]]:
    """Writes closed-loop traces of the policy at each c and of the oracle at N = c.

    With `budget` an additional anytime trace is written, running on a simulated
    clock that charges `eval.cycle_cost` per recurrent cycle.
    """
    output_dir = prepare_run(cfg, "simulate", "traces")
    trace_dir = output_dir / "traces"

    system = builders.build_system(cfg)
    utility = builders.build_utility(cfg, system)
    checkpoint = resolve_checkpoint(cfg, checkpoint)
    policy, _ = load_policy(cfg, checkpoint, system)
    oracle = builders.build_oracle(cfg, system, utility)
    n_max = cfg.training.n_max
    steps = cfg.eval.scenario.steps if steps is None else steps
    cycles = list(cfg.eval.cycles) if not cycles else list(cycles)
    scenario = builders.build_scenario(cfg, system, steps)

    controllers = []
    for c in cycles:
        controllers.append(PolicyController(policy, c))
        controllers.append(OracleController(oracle, c))
    if budget is not None:
        controllers.append(AnytimeController(policy, budget, SimulatedClock(cfg.eval.cycle_cost)))

    metric_dict = {}
    for controller in controllers:
        result = cost_to_go(system, utility, controller, scenario.x0, scenario.r_stream, steps, n_max)
        write_trace(result, system, trace_dir / f"{controller.name}.csv")
        metric_dict[f"{controller.name}.L"] = result.cost
        metric_dict[f"{controller.name}.tracking_error"] = result.tracking_error()
        log.info(f"Trace <controller={controller.name}, L={result.cost:.6g}, diverged={result.diverged}>")

    write_manifest(trace_dir, "simulate", cfg, {
        "checkpoint_sha256": file_sha256(checkpoint),
        "cycles": ",".join(str(c) for c in cycles),
        "steps": steps,
        "budget": budget if budget is not None else "none",
    })
    object_dict = {"cfg": cfg, "policy": policy, "trace_dir": trace_dir}
    return metric_dict, object_dict
