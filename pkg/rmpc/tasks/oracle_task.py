from collections import Counter
from typing import Any, Dict, Tuple

import numpy as np
import pandas as pd
from omegaconf import DictConfig

from rmpc.evaluation import EvalReport
from rmpc.oracle import MpcOracle, OracleOptions, riccati_applicable, solve_grid, solve_riccati
from rmpc.utils import get_pylogger, print_table, task_wrapper
from rmpc.utils.manifest import write_manifest

from . import builders
from .common import prepare_run
from .eval_task import bellman_table

log = get_pylogger(__name__)

ORACLE_REPORTS = ("bellman", "chain", "cache")
GRID_CHAIN_HORIZON = 2


def chain_table(cfg: DictConfig, system, utility, instances) -> pd.DataFrame:
    """Agreement of shooting with Riccati (LQ problems) or with grid search (scalar controls, N <= 2)."""
    shooting = MpcOracle(system, utility, OracleOptions(
        solver="shooting", restarts=cfg.oracle.restarts, iterations=cfg.oracle.iterations,
        learning_rate=cfg.oracle.learning_rate, tolerance=cfg.oracle.tolerance, polish=cfg.oracle.polish,
        seed=cfg.seed, workers=cfg.workers))
    rows = []
    for i, inst in enumerate(instances):
        if riccati_applicable(system, utility):
            reference, name, n = solve_riccati(system, utility, inst.x0, inst.r, inst.horizon), "riccati", inst.horizon
        elif system.m == 1:
            n = min(inst.horizon, GRID_CHAIN_HORIZON)
            reference, name = solve_grid(system, utility, inst.x0, inst.r, n, cfg.oracle.grid_step), "grid"
        else:
            log.warning("No independent oracle for this model, chain check skipped")
            break
        sol = shooting(inst.x0, inst.r, n)
        rows.append({
            "instance": i,
            "reference": name,
            "N": n,
            "reference_status": reference.status,
            "shooting_status": sol.status,
            "relative_cost_gap": abs(sol.cost - reference.cost) / max(1.0, abs(reference.cost)),
            "max_control_gap": float(np.max(np.abs(sol.controls - reference.controls))),
        })
    return pd.DataFrame(rows)


def cache_table(oracle: MpcOracle) -> pd.DataFrame:
    if oracle.cache is None:
        return pd.DataFrame(columns=["status", "records"])
    counts = Counter(sol.status for _, sol in oracle.cache.records())
    return pd.DataFrame([{"status": s, "records": counts[s]} for s in sorted(counts)],
                        columns=["status", "records"])


@task_wrapper
def oracle_check(cfg: DictConfig, report: str = "bellman", instances: int = 5) -> Tuple[Dict[str, Any], Dict[str, Any]]:
    """Self-checks of the oracle: Bellman consistency, solver agreement or cache contents."""
    output_dir = prepare_run(cfg, "oracle-check", "oracle")
    system = builders.build_system(cfg)
    utility = builders.build_utility(cfg, system)
    oracle = builders.build_oracle(cfg, system, utility)
    sampler = builders.build_sampler(cfg, system)
    eval_set = builders.eval_instances(cfg, sampler)[:instances]

    if report == "bellman":
        df = bellman_table(cfg, oracle, utility, system, eval_set)
        metric_dict = {"max_discrepancy": float(df["max_discrepancy"].max()) if len(df) else 0.0,
                       "passed": bool(df["passed"].all()) if len(df) else True}
    elif report == "chain":
        df = chain_table(cfg, system, utility, eval_set)
        metric_dict = {"max_relative_cost_gap": float(df["relative_cost_gap"].max()) if len(df) else 0.0,
                       "max_control_gap": float(df["max_control_gap"].max()) if len(df) else 0.0}
    elif report == "cache":
        df = cache_table(oracle)
        metric_dict = {"records": int(df["records"].sum()) if len(df) else 0}
    else:
        raise ValueError(f"unknown oracle report <{report}>; expected one of {ORACLE_REPORTS}")

    print_table(df, title=f"oracle {report}")
    EvalReport(tables={f"oracle_{report}": df}, summary=metric_dict).write(output_dir / "oracle")
    write_manifest(output_dir / "oracle", "oracle-check", cfg, {"report": report, "instances": len(eval_set)})
    return metric_dict, {"cfg": cfg, "table": df}
