import sys
from functools import wraps

import click

from rmpc.errors import ArchitectureMismatchError, ConfigError, ReportRefusedError, RmpcError
from rmpc.utils import configure_logging, get_pylogger

log = get_pylogger("rmpc.cli")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def exit_codes(func):
    """Maps errors onto the stable exit codes: 2 for usage and config, 1 for runtime failures."""

    @wraps(func)
    def wrap(*args, **kwargs):
        try:
            code = func(*args, **kwargs)
        except (ConfigError, ArchitectureMismatchError, FileNotFoundError) as ex:
            click.echo(f"[ERROR] {ex}", err=True)
            sys.exit(EXIT_USAGE)
        except RmpcError as ex:
            click.echo(f"[ERROR] {type(ex).__name__}: {ex}", err=True)
            sys.exit(EXIT_FAILURE)
        sys.exit(code or EXIT_OK)

    return wrap


def load(config_file, overrides, workers=None):
    from rmpc.utils.config import load_config

    overrides = list(overrides)
    if workers is not None:
        overrides.append(f"workers={workers}")
    cfg = load_config(config_file, overrides)
    configure_logging(cfg.log_level)
    return cfg


def config_options(func):
    func = click.option('-o', '--override', 'overrides', multiple=True,
                        help='Dotted config override, e.g. "training.seed=3". Repeatable.')(func)
    func = click.option('-w', '--workers', type=int, default=None,
                        help='Worker count for torch threads and instance pools. 1 is fully serial.')(func)
    func = click.option('-c', '--config', 'config_file', type=str, required=True,
                        help='Experiment recipe (YAML), e.g. configs/lq.yaml.')(func)
    return func


@click.group()
@click.pass_context
def cmd(ctx):
    pass


@cmd.command()
@config_options
@click.option('--max-iters', type=int, default=None, help='Override training.max_iterations.')
@exit_codes
def train(config_file, overrides, workers, max_iters):
    """Train the recurrent policy."""
    from rmpc.tasks import train as train_task

    if max_iters is not None:
        overrides = list(overrides) + [f"training.max_iterations={max_iters}"]
    cfg = load(config_file, overrides, workers)
    metric_dict, _ = train_task(cfg)
    click.echo(f"iterations={metric_dict['iterations']} converged={metric_dict['converged']}")


@cmd.command(name="eval")
@config_options
@click.option('--checkpoint', type=str, default=None, help='Policy checkpoint. Defaults to the final training checkpoint.')
@click.option('-r', '--report', 'reports', multiple=True,
              type=click.Choice(['policy-error', 'horizon-cost', 'tracking', 'anytime', 'sweep', 'timing', 'bellman']),
              help='Report to produce. Repeatable. Default: policy-error, horizon-cost, anytime.')
@exit_codes
def evaluate(config_file, overrides, workers, checkpoint, reports):
    """Evaluate a trained policy against the oracle."""
    from rmpc.tasks import DEFAULT_REPORTS, evaluate as eval_task

    cfg = load(config_file, overrides, workers)
    metric_dict, _ = eval_task(cfg, checkpoint=checkpoint, reports=reports or DEFAULT_REPORTS)
    if "bellman.max_discrepancy" in metric_dict:
        click.echo(f"bellman max discrepancy: {metric_dict['bellman.max_discrepancy']:.3e}")


def parse_cycles(ctx, param, value):
    if not value:
        return None
    try:
        return [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter('expected a comma separated list of integers, e.g. "7,11,15"')


@cmd.command()
@config_options
@click.option('--checkpoint', type=str, default=None, help='Policy checkpoint. Defaults to the final training checkpoint.')
@click.option('--cycles', type=str, default=None, callback=parse_cycles, help='Cycle counts, e.g. "7,11,15".')
@click.option('--steps', type=int, default=None, help='Closed-loop steps. Defaults to eval.scenario.steps.')
@click.option('--budget', type=float, default=None, help='Per-step budget for an additional anytime trace.')
@exit_codes
def simulate(config_file, overrides, workers, checkpoint, cycles, steps, budget):
    """Write closed-loop traces for the policy and the oracle."""
    from rmpc.tasks import simulate as simulate_task

    cfg = load(config_file, overrides, workers)
    simulate_task(cfg, checkpoint=checkpoint, cycles=cycles, steps=steps, budget=budget)


@cmd.command()
@click.argument('output_dir')
@exit_codes
def report(output_dir):
    """
    \b
    OUTPUT_DIR   \t: Directory holding evaluation tables (e.g. outputs/lq/eval).
    """
    from rmpc.evaluation import consolidate

    try:
        text, errors = consolidate(output_dir)
    except ReportRefusedError as ex:
        click.echo(f"[ERROR] {ex}", err=True)
        return EXIT_FAILURE
    click.echo(text, nl=False)
    if errors:
        click.echo(f"[ERROR] unreadable tables: {', '.join(errors)}", err=True)
        return EXIT_FAILURE
    return EXIT_OK


@cmd.command(name="oracle-check")
@config_options
@click.option('--report', type=click.Choice(['bellman', 'chain', 'cache']), default='bellman',
              help='bellman: tail consistency; chain: shooting vs Riccati/grid; cache: cached solutions by status.')
@click.option('--instances', type=int, default=5, help='Number of evaluation instances to check.')
@exit_codes
def oracle_check(config_file, overrides, workers, report, instances):
    """Check the optimal-control oracle."""
    from rmpc.tasks import oracle_check as oracle_task

    cfg = load(config_file, overrides, workers)
    metric_dict, _ = oracle_task(cfg, report=report, instances=instances)
    click.echo(" ".join(f"{k}={v}" for k, v in sorted(metric_dict.items())))


def main():
    cmd(obj={})


if __name__ == '__main__':
    main()
