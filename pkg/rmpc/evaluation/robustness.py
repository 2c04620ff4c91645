from typing import Callable, Dict, Sequence

import numpy as np
import pandas as pd

from rmpc.dynamics import SystemModel
from rmpc.models.components import RecurrentPolicy
from rmpc.rollout import UtilityFunction
from rmpc.utils import get_pylogger

from .closed_loop import PolicyController, cost_to_go

log = get_pylogger(__name__)


def robustness_sweep(policy: RecurrentPolicy, model: SystemModel, utility: UtilityFunction,
                     sweeps: Dict[str, Sequence[float]], x0, reference_fn: Callable[[SystemModel], np.ndarray],
                     steps: int, cycles: int, n_max: int) -> Dict[str, pd.DataFrame]:
    """Tracking error of a fixed policy on plants with one parameter changed at a time.

    `reference_fn(model)` builds the scenario reference for a plant (a distance-indexed
    road depends on the speed). Every table starts with the nominal plant; diverged runs
    are marked and carry no error.
    """
    def run(plant: SystemModel) -> dict:
        result = cost_to_go(plant, utility, PolicyController(policy, cycles), x0, reference_fn(plant), steps, n_max)
        return {"tracking_error": result.tracking_error() if not result.diverged else float("nan"),
                "L": result.cost if not result.diverged else float("nan"),
                "diverged": result.diverged}

    nominal_params = model.parameters()
    nominal = run(model)
    tables = {}
    for name in sorted(sweeps):
        if name not in nominal_params:
            raise ValueError(f"unknown model parameter <{name}> in sweep")
        rows = [{"parameter": name, "value": float(nominal_params[name]), "nominal": True, **nominal}]
        for value in sweeps[name]:
            row = {"parameter": name, "value": float(value), "nominal": False, **run(model.with_params(**{name: value}))}
            rows.append(row)
            log.info(f"Sweep <{name}={value:g}, tracking_error={row['tracking_error']:.6g}, "
                     f"diverged={row['diverged']}>")
        tables[name] = pd.DataFrame(rows)
    return tables
