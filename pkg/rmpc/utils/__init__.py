from .pylogger import configure_logging, get_pylogger
from .rich_utils import print_config_tree, print_table
from .seeding import component_rng, derive_seed
from .time import TimeKeeper, TimingRecord
from .utils import extras, save_file, task_wrapper
