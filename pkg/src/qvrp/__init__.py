"""Demand selection for vehicle routing under an emission quota."""

from .model import (
    DEFAULT_LAMBDA,
    OMIT,
    InfeasibleAssignmentError,
    InfeasibleError,
    Instance,
    InvalidRoutingError,
    PenaltyParams,
    Routing,
    Vehicle,
    check_routing,
    excess_emission,
    is_admissible,
    loss_lp,
    omitted_quantity,
    penalized_objective_g,
    route_length,
    route_load,
    routing_cost,
    routing_emission,
    terminal_reward,
)
from .instance_gen import GenConfig, gen_gap_instance, gen_knapsack_reduction, gen_synthetic
from .routing import LocalSearchConfig, route_for_vehicle_assignment, solve_vrp_local_search
from .shortcut import dp_fill, greedy_removal, solve_shortcut, solve_shortcut_multitype
from .anneal import SaConfig, oa_sa, va_sa
from .bandit import BanditConfig, exp3_run, lri_run
from .env import QuotaEnv, env_reset, env_step
from .bench import BenchConfig, run_batch, run_method

__version__ = "0.1.0"
