"""Selfish pursuit games on graphs: exact solvers, equilibria, verification."""

from .graph import Graph, builtin_graph, closed_neighborhood, parse_graph, serialize_graph
from .payoffs import GameParams, total_payoff, turn_payoff, validate_params
from .states import NULL_MOVE, TERMINAL, StateSpace, actions, build_state_space, classify, transition
from .cr import (
    CaptureTimeTable,
    cop_number,
    discounted_cr_value,
    exact_capture_times,
    minimax_capture_times,
    t_n_max,
)
from .equilibria import (
    build_capturing_threat_ne,
    build_noncapturing_ne,
    build_threat_profile,
    check_cr_optimal_ne,
    solve_aux_game,
    solve_positional_ne,
    verify_positional_ne,
    verify_threat_ne,
)
from .simulate import payoffs_of, run, run_with_forced_deviation

__all__ = [
    "Graph", "builtin_graph", "closed_neighborhood", "parse_graph", "serialize_graph",
    "GameParams", "total_payoff", "turn_payoff", "validate_params",
    "NULL_MOVE", "TERMINAL", "StateSpace", "actions", "build_state_space", "classify", "transition",
    "CaptureTimeTable", "cop_number", "discounted_cr_value", "exact_capture_times",
    "minimax_capture_times", "t_n_max",
    "build_capturing_threat_ne", "build_noncapturing_ne", "build_threat_profile",
    "check_cr_optimal_ne", "solve_aux_game", "solve_positional_ne",
    "verify_positional_ne", "verify_threat_ne",
    "payoffs_of", "run", "run_with_forced_deviation",
]

__version__ = "0.1.0"
