from .bellman import BellmanReport, check_bellman
from .cache import OracleCache, cache_key
from .dispatch import MpcOracle, OracleOptions, first_controls
from .grid import control_lattice, solve_grid
from .riccati import riccati_applicable, solve_riccati
from .shooting import ShootingOptions, ShootingProblem, solve_shooting
from .solution import (
    BOUNDS_ACTIVE,
    MAX_ITERS,
    OPTIMAL,
    RESTARTS_DISAGREE,
    OracleSolution,
    build_solution,
)
