from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from rmpc.utils import get_pylogger

from .solution import OracleSolution

log = get_pylogger(__name__)

OracleFn = Callable[[np.ndarray, np.ndarray, int], OracleSolution]


@dataclass
class BellmanReport:
    """Discrepancies |u^N_{i-1}* - u^{N-i+1}_0*(x*_{i-1}, r_{i:N})| for i = 1..N."""

    discrepancies: List[float] = field(default_factory=list)
    statuses: List[str] = field(default_factory=list)
    tolerance: float = 0.0
    conclusive: bool = True

    @property
    def max_discrepancy(self) -> float:
        return max(self.discrepancies, default=0.0)

    @property
    def passed(self) -> bool:
        return self.conclusive and self.max_discrepancy < self.tolerance

    def summary(self) -> str:
        state = "pass" if self.passed else ("fail" if self.conclusive else "inconclusive")
        return f"{state} <max_discrepancy={self.max_discrepancy:.3e}, tol={self.tolerance:g}>"


def check_bellman(oracle_fn: OracleFn, x0, r, horizon: int, tol: float,
                  solution: Optional[OracleSolution] = None) -> BellmanReport:
    """Tail-consistency of optimal controls along the optimal trajectory.

    `solution` replaces the N-step solve, which lets callers inject a modified
    control sequence.
    """
    r = np.asarray(r, dtype=np.float64)
    full = oracle_fn(np.asarray(x0, dtype=np.float64), r[:horizon], horizon) if solution is None else solution
    report = BellmanReport(tolerance=tol, statuses=[full.status])
    report.conclusive = full.is_optimal
    for i in range(1, horizon + 1):
        sub = oracle_fn(full.states[i - 1], r[i - 1:horizon], horizon - i + 1)
        report.statuses.append(sub.status)
        if not sub.is_optimal:
            report.conclusive = False
        report.discrepancies.append(float(np.max(np.abs(full.controls[i - 1] - sub.first_control))))
    if not report.conclusive:
        log.warning(f"Bellman check inconclusive, non-optimal sub-solves <statuses={report.statuses}>")
    return report
