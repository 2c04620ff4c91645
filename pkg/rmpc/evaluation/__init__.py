from .closed_loop import (
    AnytimeController,
    ClosedLoopResult,
    OracleController,
    PolicyController,
    cost_to_go,
    reference_window,
    trace_frame,
    write_trace,
)
from .experiments import (
    ClosedLoopStart,
    anytime_experiment,
    horizon_cost_table,
    random_starts,
    run_starts,
    tracking_error_table,
)
from .policy_error import (
    control_range,
    error_monitor,
    mean_ci,
    policy_error,
    policy_error_table,
    solve_oracle_table,
)
from .report import EvalReport, consolidate, read_summary
from .robustness import robustness_sweep
from .timing import linear_fit, timing_profile
