"""Discrete generalized Nash games: convexified instances, Nikaido-Isoda gap
methods for capacitated flow games, and structural closedness checks."""
from .convexify import (CheckReport, CompleteStrategySet, check_k_restrictive_closed, check_restrictive_closed,
                        check_zero_one_sufficiency, complete_strategy_sets, finite_game, prescribed_slice)
from .core import FiniteGnep, StrategyProfile, enumerate_feasible_profiles, is_feasible, player_cost, refined_domain
from .flowgame import CdfgInstance, Player, best_response_flow, generate_instance, min_cost_flow
from .nikaido import convexify, is_gne, penalty_factor, psi, v_alpha, v_bar, v_hat
from .solvers import SolveConfig, SolveResult, multistart_round, solve, solve_reformulation_exhaustive

__all__ = [
    "CdfgInstance", "CheckReport", "CompleteStrategySet", "FiniteGnep", "Player", "SolveConfig", "SolveResult",
    "StrategyProfile", "best_response_flow", "check_k_restrictive_closed", "check_restrictive_closed",
    "check_zero_one_sufficiency", "complete_strategy_sets", "convexify", "enumerate_feasible_profiles",
    "finite_game", "generate_instance", "is_feasible", "is_gne", "min_cost_flow", "multistart_round",
    "penalty_factor", "player_cost", "prescribed_slice", "psi", "refined_domain", "solve",
    "solve_reformulation_exhaustive", "v_alpha", "v_bar", "v_hat",
]
__version__ = "0.1.0"
