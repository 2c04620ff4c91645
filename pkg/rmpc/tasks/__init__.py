from .eval_task import DEFAULT_REPORTS, REPORT_KINDS, evaluate
from .oracle_task import ORACLE_REPORTS, oracle_check
from .simulate_task import simulate
from .train_task import train
