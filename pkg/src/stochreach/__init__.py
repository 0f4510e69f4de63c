"""Reachability analysis for two-player stochastic games and one-counter games."""

from .bellman import (
    SolveConfig,
    SolveResult,
    bellman_apply,
    brute_force_value,
    solve_chain_exact,
    value_iterate,
)
from .errors import ReachError, ValidationError
from .game import GameGraph, Owner, Valuation, format_game, parse_game, reachable_subgame, validate_game
from .gallery import ExampleSpec, fig1_game, fig2_automaton, solvency_automaton
from .ocssg import (
    BoundaryPolicy,
    OCAutomaton,
    check_corollary_oc,
    format_oc,
    limit_values,
    parse_oc,
    termination_bounds,
    unroll,
)
from .policies import MemorylessStrategy, StageSwitchingStrategy, format_strategy, parse_strategy
from .qualitative import positive_attractor_max, safe_states, safe_strategy_min
from .simulate import SimConfig, estimate_reach, sample_run
from .strategy import (
    ThresholdQuery,
    build_value_preserving_subgame,
    check_star_condition,
    evaluate_strategy_pair,
    extract_max_greedy,
    extract_min_optimal,
    loss_stats,
    synthesize_max_optimal,
    threshold_winner,
    value_gap,
)

__version__ = "0.1.0"
