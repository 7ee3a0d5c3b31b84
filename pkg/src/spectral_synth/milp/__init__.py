"""Small dense LP/MILP engine: bounded simplex plus best-bound branch-and-bound."""
from .model import BINARY, CONTINUOUS, INTEGER, Constraint, MilpModel, MilpSolution, Variable
from .solver import add_cut, solve_lp, solve_milp

__all__ = [
    "BINARY", "CONTINUOUS", "INTEGER", "Constraint", "MilpModel", "MilpSolution", "Variable",
    "add_cut", "solve_lp", "solve_milp",
]
