"""Exact maximum-connectivity spanning trees by cutting planes.

Three algorithms share the same eigen-row machinery:

* ``ea1`` maximises gamma over trees subject to a pool of eigen rows and
  adds the Fiedler row of every integral point that fails the semidefinite
  test.  The default runs one branch-and-cut tree with the test as a lazy
  separator; ``strategy="restart"`` re-solves the MILP from scratch after
  each cut instead.
* ``ea2`` alternates a primal tree with a dual subproblem that maximises the
  current Fiedler quadratic form.
* ``ea3`` raises a connectivity level and asks for any tree above it,
  minimising the degree of vertex 0, until no tree qualifies.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bounds import DEFAULT_ENUM_COUNT, DEFAULT_POOL_SIZE, fiedler_pool
from .errors import BudgetExceeded, InfeasibleError, InvalidInputError
from .formulations import (
    FormulationConfig, SpectralModel, add_cardinality, add_connectivity, add_edge_variables,
    build_relaxed_misdp, eigen_row, normalise_cut_vector, psd_violation,
)
from .graph import EdgeSelection, WeightedGraph, edge_quadratic_forms
from .milp import solve_milp
from .spectral import algebraic_connectivity, fiedler_vector, spectrum
from .trees import max_spanning_tree

DEFAULT_SEED_VECTORS = 20
DEFAULT_CUT_CAP = 10_000
DEFAULT_EPS = 0.01
GAP_TOL = 1e-6
ROOT_VERTEX = 0


@dataclass
class CutRecord:
    vector: np.ndarray
    trigger: EdgeSelection  # integral point the cut was generated from
    level: float  # gamma (or the fixed level) at that point
    violation: float  # level minus the row's value at the trigger


@dataclass
class SolveReport:
    algorithm: str
    optimum: float
    selection: EdgeSelection
    trace: list = field(default_factory=list)  # dicts: iteration, upper, lower
    cuts: int = 0
    subproblems: int = 0
    termination: str = "optimal"
    cut_log: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def proven(self) -> bool:
        return self.termination == "optimal"

    def to_dict(self) -> dict:
        out = {
            "algorithm": self.algorithm,
            "lambda2": self.optimum,
            "edges": [list(p) for p in self.selection.pairs],
            "termination": self.termination,
            "cuts": self.cuts,
            "subproblems": self.subproblems,
            "trace": self.trace,
        }
        out.update(self.extra)
        return out


def random_tree_vectors(graph: WeightedGraph, count: int = DEFAULT_SEED_VECTORS, seed: int = 0):
    """Fiedler vectors of maximum spanning trees under random edge weights, plus those trees."""
    rng = np.random.default_rng(seed)
    trees = [max_spanning_tree(graph, rng.random(graph.m)) for _ in range(count)]
    return [fiedler_vector(t) for t in trees], trees


def _check_graph(graph: WeightedGraph):
    if graph.n < 3:
        raise InvalidInputError("exact solvers need at least three vertices")


def _psd_separator(model: SpectralModel, log: list, cap: int, level: Optional[float] = None):
    """Lazy separator: integral points failing L(x) >= gamma (I - 11^T/n) get their Fiedler row."""
    g = model.graph

    def separate(values, integral):
        if not integral:
            return []
        x = model.edge_values(values)
        gam = float(values[model.gamma_var]) if level is None else level
        chk = psd_violation(g, x, gam)
        if not chk.violated:
            return []
        if len(log) >= cap:
            raise BudgetExceeded(f"cut cap of {cap} reached")
        v = chk.vector
        row_val = float(edge_quadratic_forms(g, v)[0] @ x)
        log.append(CutRecord(v, EdgeSelection.from_vector(g, x), gam, gam - row_val))
        return [eigen_row(model, v, rhs=level)]

    return separate


def _best_known(trees):
    best = None
    for t in trees:
        lam = algebraic_connectivity(t)
        if best is None or lam > best[0] + 1e-12:
            best = (lam, t)
    return best


def ea1(graph: WeightedGraph, vectors=None, *, improved: bool = False, seed: int = 0,
        enum_count: int = DEFAULT_ENUM_COUNT, pool_size: int = DEFAULT_POOL_SIZE,
        strategy: str = "branch-and-cut", cut_cap: int = DEFAULT_CUT_CAP,
        connectivity: str = "cutset", node_limit: Optional[int] = None) -> SolveReport:
    """Outer approximation of the semidefinite constraint by eigen rows.

    ``vectors`` overrides the starting pool.  Otherwise the pool holds the
    Fiedler vectors of 20 random trees, or with ``improved`` the ranked pool
    from :func:`fiedler_pool`.  The best tree behind the pool serves as the
    initial incumbent.
    """
    _check_graph(graph)
    if strategy not in ("branch-and-cut", "restart"):
        raise InvalidInputError("strategy must be 'branch-and-cut' or 'restart'")
    known = [max_spanning_tree(graph)]
    if vectors is None:
        if improved:
            pool = fiedler_pool(graph, enum_count, pool_size)
            vectors = pool.vectors
            known.append(pool.incumbent)
        else:
            vectors, seed_trees = random_tree_vectors(graph, DEFAULT_SEED_VECTORS, seed)
            known.extend(seed_trees)
    vectors = [normalise_cut_vector(v) for v in vectors]
    inc_val, inc_tree = _best_known(known)
    name = "ea1-improved" if improved else "ea1"
    model = build_relaxed_misdp(graph, FormulationConfig(vectors=vectors, connectivity=connectivity))
    log: list = []
    trace: list = []
    model.separators.append(_psd_separator(model, log, cut_cap))
    # strictly below the known value so the solver can return that tree itself
    cutoff = inc_val - 1e-9 * (1.0 + abs(inc_val))

    if strategy == "restart":
        return _ea1_restart(graph, model, name, log, trace, cutoff, inc_val, inc_tree, node_limit)

    def progress(nodes, bound, incumbent):
        lower = inc_val if incumbent is None else max(inc_val, incumbent)
        if not trace or trace[-1]["upper"] != bound or trace[-1]["lower"] != lower:
            trace.append({"iteration": nodes, "upper": bound, "lower": lower})

    try:
        sol = solve_milp(model, node_limit=node_limit, cutoff=cutoff, progress=progress)
    except BudgetExceeded:
        return SolveReport(name, inc_val, inc_tree, trace, len(log), 1, "iteration-cap", log)
    if sol.has_solution:
        sel = model.selection(sol.values)
        lam = algebraic_connectivity(sel)
        if lam < inc_val:
            sel, lam = inc_tree, inc_val
    else:
        sel, lam = inc_tree, inc_val
    term = "optimal" if sol.status in ("optimal", "cutoff") else "iteration-cap"
    rep = SolveReport(name, lam, sel, trace, len(log), 1, term, log)
    rep.extra["nodes"] = sol.nodes
    return rep


def _ea1_restart(graph, model, name, log, trace, cutoff, inc_val, inc_tree, node_limit):
    """Solve, test, cut, solve again from scratch."""
    sep = model.separators.pop()
    it = 0
    while True:
        it += 1
        sol = solve_milp(model, node_limit=node_limit, cutoff=cutoff)
        if not sol.has_solution:
            term = "optimal" if sol.status == "cutoff" else "iteration-cap"
            trace.append({"iteration": it, "upper": inc_val, "lower": inc_val})
            return SolveReport(name, inc_val, inc_tree, trace, len(log), it, term, log)
        trace.append({"iteration": it, "upper": float(sol.objective), "lower": inc_val})
        try:
            rows = sep(sol.values, True)
        except BudgetExceeded:
            return SolveReport(name, inc_val, inc_tree, trace, len(log), it, "iteration-cap", log)
        if not rows:
            sel = model.selection(sol.values)
            lam = algebraic_connectivity(sel)
            if lam < inc_val:
                sel, lam = inc_tree, inc_val
            term = "optimal" if sol.proven else "iteration-cap"
            trace.append({"iteration": it, "upper": float(sol.objective), "lower": lam})
            return SolveReport(name, lam, sel, trace, len(log), it, term, log)
        model.cut_pool.extend(rows)


# ---- EA2 --------------------------------------------------------------------

def _tree_model(graph: WeightedGraph, connectivity: str) -> SpectralModel:
    model = SpectralModel(graph, "dual_subproblem")
    add_edge_variables(model)
    add_cardinality(model, None)
    add_connectivity(model, connectivity)
    return model


def _dual_subproblem(graph, v, gamma_p, P, connectivity, tie_tol, log, cap):
    """max v.L(x)v over trees whose connectivity beats lambda_2(P), or P itself.

    Integral points below lambda_2(P) get the row v_t.L(x)v_t >= lambda_2(P)
    from their own Fiedler vector v_t; a different tree tying with P gets a
    row that removes exactly that tree.  Returns (status, value, tree).
    """
    q = edge_quadratic_forms(graph, v)[0]
    model = _tree_model(graph, connectivity)
    model.set_objective(dict(zip(model.edge_vars.tolist(), q.tolist())), "max")
    p_set = set(P.indices)

    def separate(values, integral):
        if not integral:
            return []
        sel = model.selection(values)
        if set(sel.indices) == p_set:
            return []
        spec = spectrum(graph, sel)
        lam = float(spec.values[1])
        if lam > gamma_p + tie_tol:
            return []
        if len(log) >= cap:
            raise BudgetExceeded(f"cut cap of {cap} reached")
        if lam >= gamma_p - tie_tol:
            log.append(CutRecord(None, sel, gamma_p, 0.0))
            return [model.make_row([(int(model.edge_vars[k]), 1.0) for k in sel.indices], "<=",
                                   graph.n - 2.0, "elim")]
        vt = spec.vectors[:, 1]
        log.append(CutRecord(vt, sel, gamma_p, gamma_p - lam))
        return [eigen_row(model, vt, rhs=gamma_p)]

    model.separators.append(separate)
    # trees scoring no better than P's own value cannot move the primal
    sol = solve_milp(model, cutoff=gamma_p + GAP_TOL)
    if sol.status == "cutoff":
        return "certified", gamma_p, P
    if not sol.has_solution:
        raise InfeasibleError(f"dual subproblem returned {sol.status}")
    return "solved", float(sol.objective), model.selection(sol.values)


def ea2(graph: WeightedGraph, init: Optional[EdgeSelection] = None, *, max_iterations: int = 10_000,
        connectivity: str = "cutset", cut_cap: int = DEFAULT_CUT_CAP) -> SolveReport:
    """Iterative primal-dual search.

    Primal: the best tree so far, P.  Dual: max v_P.L(x)v_P over trees, a
    bound on every tree whose connectivity is at least lambda_2(P).  Dual
    optima worse than P are cut off by their own Fiedler rows (at level
    lambda_2(P)) inside one branch-and-bound, so each outer step ends at a
    tree P_t no worse than P.  P moves only on strict improvement; the run
    stops when the dual bound meets the primal value within 1e-6.
    """
    _check_graph(graph)
    P = max_spanning_tree(graph) if init is None else init
    if not P.is_spanning_tree():
        raise InfeasibleError("initial selection is not a spanning tree")
    spec = spectrum(graph, P)
    gamma_p, v_p = float(spec.values[1]), spec.vectors[:, 1]
    dual_cost = math.inf
    trace = []
    log: list = []
    for outer in range(1, max_iterations + 1):
        tie_tol = 1e-9 * (1.0 + abs(gamma_p))
        try:
            status, val, Pt = _dual_subproblem(graph, v_p, gamma_p, P, connectivity, tie_tol,
                                               log, cut_cap)
        except BudgetExceeded:
            trace.append({"iteration": outer, "upper": dual_cost, "lower": gamma_p})
            return SolveReport("ea2", gamma_p, P, trace, len(log), outer, "iteration-cap", log)
        dual_cost = min(dual_cost, val)
        if status == "solved" and Pt != P:
            P = Pt
            spec = spectrum(graph, P)
            gamma_p, v_p = float(spec.values[1]), spec.vectors[:, 1]
        trace.append({"iteration": outer, "upper": dual_cost, "lower": gamma_p})
        if dual_cost - gamma_p <= GAP_TOL:
            return SolveReport("ea2", gamma_p, P, trace, len(log), outer, "optimal", log)
    return SolveReport("ea2", gamma_p, P, trace, len(log), max_iterations, "iteration-cap", log)


# ---- EA3 --------------------------------------------------------------------

def build_level_model(graph: WeightedGraph, level: float, vectors, connectivity: str = "cutset",
                      root: int = ROOT_VERTEX) -> SpectralModel:
    """Trees with v.L(x)v >= level for every pooled v, minimising the degree of ``root``."""
    model = SpectralModel(graph, "level_bsdp")
    add_edge_variables(model)
    add_cardinality(model, None)
    add_connectivity(model, connectivity)
    for v in vectors:
        model.add_cut(eigen_row(model, v, rhs=level))
    at_root = [k for k, (i, j, _) in enumerate(graph.edges) if root in (i, j)]
    model.set_objective({int(model.edge_vars[k]): 1.0 for k in at_root}, "min")
    return model


def level_search(graph: WeightedGraph, start: EdgeSelection, eps: float, vectors, connectivity: str,
                 build=None, check=None, name: str = "ea3", max_levels: int = 100_000,
                 cut_cap: int = DEFAULT_CUT_CAP, deadline: Optional[float] = None) -> SolveReport:
    """Raise the level past each new incumbent until the level model is infeasible.

    ``build(level, vectors)`` returns the model for a level (default: the
    plain tree model); ``check(model)`` may return an extra separator that
    rejects integral trees breaking a resource limit.  Vectors of rows added
    at one level are reused at every later one with the new right-hand side.
    ``deadline`` (a ``time.monotonic()`` value) makes the search anytime:
    the incumbent is returned with termination ``budget``.
    """
    if eps <= 0:
        raise InvalidInputError("eps must be positive")
    pool = [normalise_cut_vector(v) for v in vectors]
    inc, inc_val = start, algebraic_connectivity(start)
    level = inc_val + eps
    trace = [{"iteration": 0, "upper": math.inf, "lower": inc_val}]
    log: list = []
    subproblems = 0

    def report(term):
        return SolveReport(name, inc_val, inc, trace, len(log), subproblems, term, log)

    for it in range(1, max_levels + 1):
        limit = None
        if deadline is not None:
            limit = deadline - time.monotonic()
            if limit <= 0:
                return report("budget")
        model = (build or (lambda lv, vs: build_level_model(graph, lv, vs, connectivity)))(level, pool)
        model.separators.append(_psd_separator(model, log, cut_cap, level=level))
        if check is not None:
            model.separators.append(check(model))
        subproblems += 1
        first_new = len(log)
        try:
            sol = solve_milp(model, time_limit=limit)
        except BudgetExceeded:
            return report("iteration-cap")
        # the separator's vectors carry over to the next level
        pool = _dedupe(pool + [rec.vector for rec in log[first_new:]])
        if sol.status == "time_limit" and not sol.has_solution:
            return report("budget")
        if not sol.has_solution:
            trace.append({"iteration": it, "upper": inc_val + eps, "lower": inc_val})
            return report("optimal")
        sel = model.selection(sol.values)
        lam = algebraic_connectivity(sel)
        if lam > inc_val:
            inc, inc_val = sel, lam
        # a tree accepted within the PSD tolerance may sit just under the level
        level = max(inc_val, level) + eps
        trace.append({"iteration": it, "upper": math.inf, "lower": inc_val})
    return report("iteration-cap")


def _dedupe(vectors):
    out, seen = [], set()
    for v in vectors:
        key = np.round(v, 12).tobytes()
        if key not in seen:
            seen.add(key)
            out.append(v)
    return out


def ea3(graph: WeightedGraph, eps: float = DEFAULT_EPS, vectors=None, *, seed: int = 0,
        connectivity: str = "cutset") -> SolveReport:
    """Bisection on the connectivity level; optimal within ``eps``."""
    _check_graph(graph)
    if vectors is None:
        vectors, _ = random_tree_vectors(graph, DEFAULT_SEED_VECTORS, seed)
    return level_search(graph, max_spanning_tree(graph), eps, vectors, connectivity)
