from .convergence import ConvergenceMonitor
from .history_writer import HistoryWriter
from .policy_checkpoint import PolicyCheckpoint
from .policy_error_monitor import PolicyErrorMonitor
