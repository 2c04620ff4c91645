from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple

import pandas as pd
from omegaconf import DictConfig

from rmpc.callbacks.policy_checkpoint import FINAL_NAME
from rmpc.evaluation import (
    EvalReport,
    anytime_experiment,
    horizon_cost_table,
    policy_error_table,
    random_starts,
    robustness_sweep,
    solve_oracle_table,
    timing_profile,
    tracking_error_table,
)
from rmpc.models.checkpoint import check_architecture, load_checkpoint
from rmpc.oracle import check_bellman, riccati_applicable
from rmpc.utils import component_rng, get_pylogger, print_table, task_wrapper
from rmpc.utils.manifest import file_sha256, write_manifest

from . import builders
from .common import prepare_run

log = get_pylogger(__name__)

REPORT_KINDS = ("policy-error", "horizon-cost", "tracking", "anytime", "sweep", "timing", "bellman")
DEFAULT_REPORTS = ("policy-error", "horizon-cost", "anytime")
BELLMAN_INSTANCES = 5


def resolve_checkpoint(cfg: DictConfig, checkpoint: Optional[str]) -> Path:
    return Path(checkpoint) if checkpoint else Path(cfg.paths.output_dir, "checkpoints", FINAL_NAME)


def load_policy(cfg: DictConfig, checkpoint: Path, system):
    """Loads a checkpoint and verifies it has the configured architecture."""
    policy, metadata = load_checkpoint(checkpoint)
    check_architecture(policy, builders.build_policy_spec(cfg, system))
    log.info(f"Loaded policy <{checkpoint}, iteration={metadata.get('iteration')}>")
    return policy, metadata


def bellman_table(cfg: DictConfig, oracle, utility, system, instances) -> pd.DataFrame:
    exact = riccati_applicable(system, utility) and cfg.oracle.solver in ("auto", "riccati")
    tol = 1e-9 if exact else 1e-3
    rows = []
    for i, inst in enumerate(instances[:BELLMAN_INSTANCES]):
        report = check_bellman(oracle, inst.x0, inst.r, inst.horizon, tol)
        rows.append({"instance": i, "max_discrepancy": report.max_discrepancy, "tolerance": tol,
                     "passed": report.passed, "conclusive": report.conclusive})
        log.info(f"Bellman check <instance={i}, {report.summary()}>")
    return pd.DataFrame(rows)


@task_wrapper
def evaluate(cfg: DictConfig, checkpoint: Optional[str] = None,
             reports: Sequence[str] = DEFAULT_REPORTS) -> Tuple[Dict[str, Any], Dict[str, Any]]:
    """Evaluates a trained policy against the oracle and writes the report tables.

    Args:
        cfg (DictConfig): Experiment configuration.
        checkpoint (str, optional): Policy checkpoint; defaults to the final training checkpoint.
        reports (Sequence[str]): Which tables to produce, out of `REPORT_KINDS`.

    Returns:
        Tuple[dict, dict]: Dict with metrics and dict with all instantiated objects.
    """
    output_dir = prepare_run(cfg, "eval", "eval")
    eval_dir = output_dir / "eval"

    system = builders.build_system(cfg)
    utility = builders.build_utility(cfg, system)
    checkpoint = resolve_checkpoint(cfg, checkpoint)
    policy, _ = load_policy(cfg, checkpoint, system)
    sampler = builders.build_sampler(cfg, system)
    oracle = builders.build_oracle(cfg, system, utility)
    instances = builders.eval_instances(cfg, sampler)
    n_max = cfg.training.n_max
    steps = cfg.eval.steps
    workers = cfg.workers

    report = EvalReport(summary={"checkpoint_sha256": file_sha256(checkpoint), "seed": cfg.seed,
                                 "n_max": n_max, "eval_instances": len(instances)})

    if "policy-error" in reports:
        table = solve_oracle_table(oracle, instances, builders.eval_horizons(cfg), solve_many=oracle.solve_many)
        df = policy_error_table(policy, instances, table)
        report.add_table("policy_error", df)
        for row in df.itertuples(index=False):
            report.summary[f"e_N.{row.N:02d}"] = float(row.e_N)
        report.summary["e_N.max"] = float(df["e_N"].max())

    starts = None
    if "horizon-cost" in reports or "anytime" in reports:
        rng = component_rng(cfg.seed, "closed-loop")
        starts = random_starts(sampler, rng, cfg.eval.num_starts, steps, n_max)

    if "horizon-cost" in reports:
        df = horizon_cost_table(system, utility, policy, oracle, list(cfg.eval.cycles), starts, steps, n_max,
                                workers)
        report.add_table("horizon_cost", df)
        for row in df.itertuples(index=False):
            report.summary[f"L.policy.c{row.c:02d}"] = float(row.policy_L)

    if "tracking" in reports:
        scenario = builders.build_scenario(cfg, system)
        df = tracking_error_table(system, utility, policy, oracle, list(cfg.eval.cycles), scenario,
                                  cfg.eval.scenario.steps, n_max)
        report.add_table("tracking_error", df)

    if "anytime" in reports:
        df = anytime_experiment(system, utility, policy, list(cfg.eval.budgets), cfg.eval.cycle_cost, starts,
                                steps, n_max, workers)
        report.add_table("anytime", df)

    if "sweep" in reports:
        if not cfg.eval.sweeps:
            log.warning("No sweeps configured! <cfg.eval.sweeps={}>")
        scenario = builders.build_scenario(cfg, system)
        tables = robustness_sweep(policy, system, utility, {k: list(v) for k, v in cfg.eval.sweeps.items()},
                                  scenario.x0, lambda plant: builders.scenario_stream(cfg, plant),
                                  cfg.eval.scenario.steps, n_max, n_max)
        for name, df in tables.items():
            report.add_table(f"sweep_{name}", df)
            nominal = float(df.loc[df["nominal"], "tracking_error"].iloc[0])
            errors = df.loc[~df["nominal"], "tracking_error"]
            report.summary[f"sweep.{name}.spread"] = float((errors.max() - errors.min()) / nominal) \
                if nominal > 0 and errors.notna().all() else float("nan")

    if "timing" in reports:
        plain_oracle = builders.build_oracle(cfg, system, utility, use_cache=False)
        inst = instances[0]
        df, fit = timing_profile(policy, plain_oracle, inst.x0, inst.r, builders.eval_horizons(cfg),
                                 repeats=cfg.eval.timing_repeats, warmup=cfg.eval.timing_warmup)
        report.add_table("timing", df)
        report.summary.update(fit)

    if "bellman" in reports:
        df = bellman_table(cfg, oracle, utility, system, instances)
        report.add_table("bellman", df)
        report.summary["bellman.max_discrepancy"] = float(df["max_discrepancy"].max())

    report.write(eval_dir)
    for name in sorted(report.tables):
        print_table(report.tables[name], title=name)
    write_manifest(eval_dir, "eval", cfg, {"checkpoint_sha256": report.summary["checkpoint_sha256"],
                                           "reports": ",".join(sorted(reports))})

    metric_dict = dict(report.summary)
    object_dict = {"cfg": cfg, "policy": policy, "report": report, "eval_dir": eval_dir}
    return metric_dict, object_dict
