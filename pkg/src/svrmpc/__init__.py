"""Trajectory optimisation and asynchronous MPC with online state-vector
reduction.

The optimiser plans over a dynamically chosen subset of the system's
degrees of freedom while rollouts always step the full nonlinear model;
shrinking the subset shrinks the finite-difference derivative bill and
with it the policy lag of the MPC loop.
"""

from ._kernels import BACKEND as kernel_backend
from .cost import (CostExpansion, CostSpec, expansion_reduced, mpc_cost,
                   running_cost, trajectory_cost)
from .dynamics import (DynamicsModel, LinearizedDynamics, linearize_reduced,
                       linearize_trajectory, make_clutter_model,
                       make_lti_model, make_soft_rigid_model,
                       make_softbody_model)
from .mpc import (MpcConfig, MpcRecord, SuccessCriterion, agent_tick,
                  run_mpc)
from .optimizer import (GainSchedule, OptimiserStats, Trajectory,
                        backward_pass, forward_rollout, optimise_iteration)
from .selection import (ImportanceScores, SelectionPolicy,
                        identify_dofs_to_add, identify_dofs_to_remove,
                        importance_sum, importance_svd, initial_set)
from .statespace import (DofLayout, DofSet, gather, reduced_index, scatter,
                         total_dofs)

__version__ = "0.1.0"

__all__ = [
    "kernel_backend", "CostExpansion", "CostSpec", "expansion_reduced",
    "mpc_cost", "running_cost", "trajectory_cost", "DynamicsModel",
    "LinearizedDynamics", "linearize_reduced", "linearize_trajectory",
    "make_clutter_model", "make_lti_model", "make_soft_rigid_model",
    "make_softbody_model", "MpcConfig", "MpcRecord", "SuccessCriterion",
    "agent_tick", "run_mpc", "GainSchedule", "OptimiserStats", "Trajectory",
    "backward_pass", "forward_rollout", "optimise_iteration",
    "ImportanceScores", "SelectionPolicy", "identify_dofs_to_add",
    "identify_dofs_to_remove", "importance_sum", "importance_svd",
    "initial_set", "DofLayout", "DofSet", "gather", "reduced_index",
    "scatter", "total_dofs",
]
