from .autograd import model_step, utility_stage
from .forward_mode import rollout_grad_forward
from .instance import MpcInstance, stack_instances
from .objective import BatchObjective, objective_batch, objective_tensor
from .rollout import (
    BatchTrajectory,
    RolloutResult,
    parameter_gradient,
    rollout_cost,
    rollout_grad,
    simulate_batch,
    simulate_controls,
    work_summary,
)
from .utility import QuadraticTrackingUtility, UtilityFunction, ZeroUtility
