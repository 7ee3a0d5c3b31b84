"""Model containers for the LP/MILP engine."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..errors import InvalidInputError

CONTINUOUS = "continuous"
BINARY = "binary"
INTEGER = "integer"
SENSES = ("<=", ">=", "==")


@dataclass
class Variable:
    name: str
    kind: str = CONTINUOUS
    lb: float = 0.0
    ub: float = math.inf

    @property
    def is_integer(self) -> bool:
        return self.kind in (BINARY, INTEGER)


@dataclass
class Constraint:
    """Linear row ``sum coeffs[k] * x[index[k]]  sense  rhs``."""

    index: np.ndarray
    coeffs: np.ndarray
    sense: str
    rhs: float
    name: str = ""

    def activity(self, x: np.ndarray) -> float:
        return float(np.dot(self.coeffs, x[self.index]))

    def violation(self, x: np.ndarray) -> float:
        act = self.activity(x)
        if self.sense == "<=":
            return act - self.rhs
        if self.sense == ">=":
            return self.rhs - act
        return abs(act - self.rhs)


@dataclass
class MilpSolution:
    status: str  # optimal | infeasible | unbounded | node_limit | time_limit | cutoff
    values: Optional[np.ndarray]
    objective: float
    bound: float = math.nan
    nodes: int = 0
    lp_iterations: int = 0
    cuts_added: int = 0
    names: dict = field(default_factory=dict, repr=False)

    @property
    def proven(self) -> bool:
        return self.status == "optimal"

    @property
    def has_solution(self) -> bool:
        return self.values is not None

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.names[name]])


# separator(x, integral) -> list of Constraint; called on node LP solutions
Separator = Callable[[np.ndarray, bool], list]


class MilpModel:
    """Variables, linear rows, an objective and a growable pool of cuts.

    Rows in ``cut_pool`` are valid inequalities that the solver activates
    only once a node solution violates them.  ``separators`` generate new
    rows on demand from a node solution.
    """

    def __init__(self, name: str = "model"):
        self.name = name
        self.variables: list[Variable] = []
        self.names: dict[str, int] = {}
        self.constraints: list[Constraint] = []
        self.cut_pool: list[Constraint] = []
        self.separators: list[Separator] = []
        self.objective = np.zeros(0)
        self.sense = "max"

    @property
    def num_vars(self) -> int:
        return len(self.variables)

    def add_variable(self, name: str, kind: str = CONTINUOUS, lb: float = 0.0, ub: float = math.inf) -> int:
        if name in self.names:
            raise InvalidInputError(f"duplicate variable name {name!r}")
        if kind not in (CONTINUOUS, BINARY, INTEGER):
            raise InvalidInputError(f"unknown variable kind {kind!r}")
        if kind == BINARY:
            lb, ub = max(0.0, lb), min(1.0, ub)
        if lb > ub:
            raise InvalidInputError(f"variable {name!r} has lb > ub")
        self.names[name] = len(self.variables)
        self.variables.append(Variable(name, kind, float(lb), float(ub)))
        self.objective = np.append(self.objective, 0.0)
        return self.names[name]

    def var(self, key) -> int:
        if isinstance(key, (int, np.integer)):
            if not 0 <= key < self.num_vars:
                raise InvalidInputError(f"variable index {key} out of range")
            return int(key)
        try:
            return self.names[key]
        except KeyError:
            raise InvalidInputError(f"unknown variable {key!r}") from None

    def make_row(self, coeffs, sense: str, rhs: float, name: str = "") -> Constraint:
        if sense not in SENSES:
            raise InvalidInputError(f"unknown sense {sense!r}")
        merged: dict[int, float] = {}
        items = coeffs.items() if isinstance(coeffs, dict) else coeffs
        for key, a in items:
            k = self.var(key)
            merged[k] = merged.get(k, 0.0) + float(a)
        keys = sorted(k for k, a in merged.items() if a != 0.0)
        return Constraint(
            np.array(keys, dtype=np.int64),
            np.array([merged[k] for k in keys], dtype=float),
            sense,
            float(rhs),
            name,
        )

    def add_constraint(self, coeffs, sense: str, rhs: float, name: str = "") -> Constraint:
        row = self.make_row(coeffs, sense, rhs, name)
        self.constraints.append(row)
        return row

    def add_cut(self, coeffs, sense: str = ">=", rhs: float = 0.0, name: str = "") -> Constraint:
        """Append a valid inequality to the cut pool."""
        row = coeffs if isinstance(coeffs, Constraint) else self.make_row(coeffs, sense, rhs, name)
        self.cut_pool.append(row)
        return row

    def set_objective(self, coeffs, sense: str = "max"):
        if sense not in ("max", "min"):
            raise InvalidInputError("objective sense must be 'max' or 'min'")
        self.objective = np.zeros(self.num_vars)
        items = coeffs.items() if isinstance(coeffs, dict) else coeffs
        for key, a in items:
            self.objective[self.var(key)] += float(a)
        self.sense = sense

    def bounds(self):
        lb = np.array([v.lb for v in self.variables])
        ub = np.array([v.ub for v in self.variables])
        return lb, ub

    def integer_mask(self) -> np.ndarray:
        return np.array([v.is_integer for v in self.variables], dtype=bool)

    def max_violation(self, x: np.ndarray, include_pool: bool = True) -> float:
        rows = self.constraints + (self.cut_pool if include_pool else [])
        worst = 0.0
        for r in rows:
            worst = max(worst, r.violation(x))
        lb, ub = self.bounds()
        worst = max(worst, float(np.max(lb - x, initial=0.0)), float(np.max(x - ub, initial=0.0)))
        return worst

    def to_lp_format(self) -> str:
        """CPLEX LP text for inspection (pool rows are written as constraints)."""

        def term_list(index, coeffs):
            parts = []
            for k, a in zip(index, coeffs):
                sign = "-" if a < 0 else "+"
                parts.append(f"{sign} {abs(a):.12g} {self.variables[k].name}")
            text = " ".join(parts) if parts else "0"
            return text[2:] if text.startswith("+ ") else text

        lines = ["\\ " + self.name, "Maximize" if self.sense == "max" else "Minimize"]
        nz = np.flatnonzero(self.objective)
        lines.append(" obj: " + term_list(nz, self.objective[nz]))
        lines.append("Subject To")
        op = {"<=": "<=", ">=": ">=", "==": "="}
        for k, r in enumerate(self.constraints + self.cut_pool):
            label = r.name or f"r{k}"
            lines.append(f" {label}: {term_list(r.index, r.coeffs)} {op[r.sense]} {r.rhs:.12g}")
        lines.append("Bounds")
        for v in self.variables:
            lo = "-inf" if v.lb == -math.inf else f"{v.lb:.12g}"
            hi = "+inf" if v.ub == math.inf else f"{v.ub:.12g}"
            lines.append(f" {lo} <= {v.name} <= {hi}")
        ints = [v.name for v in self.variables if v.kind == INTEGER]
        bins = [v.name for v in self.variables if v.kind == BINARY]
        if ints:
            lines.append("General")
            lines.append(" " + " ".join(ints))
        if bins:
            lines.append("Binary")
            lines.append(" " + " ".join(bins))
        lines.append("End")
        return "\n".join(lines) + "\n"
