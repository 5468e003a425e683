"""Cascading-failure simulation and K-link attack search on resistive power grids."""

__version__ = "0.1.0"

from .attacks import (
    AttackPlan,
    AttackProblem,
    attack_exhaustive,
    attack_exhaustive_single,
    attack_lc_ga,
    attack_lc_oa,
    attack_pso_oa,
    attack_random,
    attack_top_measure,
    evaluate_attack,
)
from .cascade import CapacityTable, CascadeReport, compute_capacities, damage, generator_reachability, simulate_cascade
from .centrality import CentralityWeights, LinkScore, link_degree, rank_links, score_links
from .grid import Branch, Bus, BusKind, FlowState, GridNetwork, SolverError, build_system, solve_flow
from .ingest import assign_generators, load_network, parse_case, to_network
from .pso import SwarmConfig, run_continuous, run_topk_binary

__all__ = [name for name in dir() if not name.startswith("_")]
