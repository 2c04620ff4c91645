from .cells import CELL_KINDS, GatedCell, PlainRnnCell
from .recurrent_policy import PolicySpec, RecurrentPolicy, init_params, zero_policy
