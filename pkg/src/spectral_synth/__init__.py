"""Spanning-tree network synthesis for maximum algebraic connectivity."""
from .bounds import FiedlerPool, UpperBound, fiedler_pool, upper_bound
from .errors import (BudgetExceeded, DisconnectedError, InfeasibleError, InvalidInputError,
                     SpectralSynthError)
from .exact import SolveReport, ea1, ea2, ea3, level_search
from .graph import EdgeSelection, WeightedGraph, laplacian
from .heuristics import HeuristicResult, improved_k_opt, multi_start, star_initials, two_opt
from .instances import generate_random, load_fixture
from .resources import (DiameterSpec, PowerSpec, min_power, optimal_placement, placement_power,
                        power_lower_bound, solve_diameter, solve_power, tree_diameter, tree_power)
from .spectral import algebraic_connectivity, fiedler_vector, spectrum, worst_case_compliance
from .trees import (all_spanning_trees, brute_force_optimum, diameter_filter, enumerate_decreasing,
                    enumerate_increasing, max_spanning_tree, min_spanning_tree, power_filter,
                    spanning_tree_count)

__version__ = "0.1.0"

__all__ = [
    "BudgetExceeded", "DiameterSpec", "DisconnectedError", "EdgeSelection", "FiedlerPool",
    "HeuristicResult", "InfeasibleError", "InvalidInputError", "PowerSpec", "SolveReport",
    "SpectralSynthError", "UpperBound", "WeightedGraph", "algebraic_connectivity",
    "all_spanning_trees", "brute_force_optimum", "diameter_filter", "ea1", "ea2", "ea3",
    "enumerate_decreasing", "enumerate_increasing", "fiedler_pool", "fiedler_vector",
    "generate_random", "improved_k_opt", "laplacian", "level_search", "load_fixture",
    "max_spanning_tree", "min_power", "min_spanning_tree", "multi_start", "optimal_placement",
    "placement_power", "power_filter", "power_lower_bound", "solve_diameter", "solve_power",
    "spanning_tree_count", "spectrum", "star_initials", "tree_diameter", "tree_power", "two_opt",
    "upper_bound", "worst_case_compliance",
]
