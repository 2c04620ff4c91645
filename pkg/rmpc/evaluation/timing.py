from contextlib import contextmanager
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import torch

from rmpc.models.components import RecurrentPolicy
from rmpc.utils import TimeKeeper, get_pylogger

log = get_pylogger(__name__)


@contextmanager
def single_thread():
    threads = torch.get_num_threads()
    torch.set_num_threads(1)
    try:
        yield
    finally:
        torch.set_num_threads(threads)


def linear_fit(x: Sequence[float], y: Sequence[float]) -> Tuple[float, float, float]:
    """(slope, intercept, R^2) of a least-squares line."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    total = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(residual ** 2) / total if total > 0 else 1.0
    return float(slope), float(intercept), float(r2)


def timing_profile(policy: RecurrentPolicy, oracle_fn: Optional[Callable], x0, r, cycles: Sequence[int],
                   repeats: int = 20, warmup: int = 3) -> Tuple[pd.DataFrame, dict]:
    """Per-c policy inference time and per-N oracle solve time (ms), single-threaded.

    Returns the table and the linear fit of policy time against c.
    """
    keeper = TimeKeeper()
    x0 = np.asarray(x0, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    rows = []
    with single_thread():
        for c in cycles:
            policy_s = keeper.measure(f"policy_c{c}", lambda: policy.act(x0, r[:c], c), repeats, warmup)
            row = {"c": c, "policy_ms": policy_s * 1e3}
            if oracle_fn is not None:
                oracle_s = keeper.measure(f"oracle_N{c}", lambda: oracle_fn(x0, r[:c], c),
                                          max(3, repeats // 4), 1)
                row["oracle_ms"] = oracle_s * 1e3
            rows.append(row)
    keeper.print(log)
    df = pd.DataFrame(rows)
    slope, intercept, r2 = linear_fit(df["c"], df["policy_ms"]) if len(df) > 1 else (float("nan"),) * 3
    fit = {"policy_ms_per_cycle": slope, "policy_ms_intercept": intercept, "policy_fit_r2": r2}
    log.info(f"Policy inference scaling <ms_per_cycle={slope:.4g}, r2={r2:.4f}>")
    return df, fit
