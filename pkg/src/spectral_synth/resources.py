"""Spanning trees under a diameter limit or a transmission power budget.

Diameter: a tree has diameter at most an even D exactly when some centre
reaches every vertex in D/2 hops.  The model adds a source vertex s joined
to every vertex, asks for a spanning tree of the augmented graph with a
single source edge, and bounds each source-to-vertex flow path by D/2 + 1.

Power: placing the vertices optimally (spread R in two orthogonal
directions) costs R^2 (lambda_2 + lambda_3).  Trees over the budget are
removed one at a time by rows that forbid exactly their edge set.
"""
from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import BudgetExceeded, DisconnectedError, InfeasibleError, InvalidInputError
from .exact import (
    DEFAULT_CUT_CAP, DEFAULT_EPS, DEFAULT_SEED_VECTORS, ROOT_VERTEX, SolveReport, _psd_separator,
    build_level_model, level_search, random_tree_vectors,
)
from .formulations import (
    FormulationConfig, SpectralModel, add_cardinality, add_edge_variables, build_flow_constraints,
    build_relaxed_misdp, eigen_row,
)
from .graph import EdgeSelection, WeightedGraph, is_connected
from .instances import star
from .milp import BINARY, solve_milp
from .spectral import algebraic_connectivity, batch_eigenvalues, spectrum
from .trees import enumerate_increasing, max_spanning_tree

POWER_TOL = 1e-6
POWER_INIT_TREES = 10_000


@dataclass(frozen=True)
class DiameterSpec:
    D: int

    def __post_init__(self):
        if not isinstance(self.D, (int, np.integer)) or isinstance(self.D, bool):
            raise InvalidInputError("diameter bound must be an integer")
        if self.D < 2:
            raise InvalidInputError("diameter bound must be at least 2")
        if self.D % 2:
            raise InvalidInputError("only even diameter bounds are supported for trees")

    def effective(self, n: int) -> int:
        """The bound clamped to 2(n - 1), beyond which it no longer restricts anything."""
        return min(int(self.D), 2 * (n - 1))


@dataclass(frozen=True)
class PowerSpec:
    P_max: float
    R: float = 1.0

    def __post_init__(self):
        if not (self.P_max > 0 and math.isfinite(self.P_max)):
            raise InvalidInputError("P_max must be a positive finite number")
        if not self.R > 0:
            raise InvalidInputError("R must be positive")


# ---- diameter ---------------------------------------------------------------

def tree_diameter(sel: EdgeSelection) -> int:
    """Largest hop distance between two vertices (BFS from every vertex)."""
    n = sel.graph.n
    adj = [[] for _ in range(n)]
    for i, j in sel.pairs:
        adj[i].append(j)
        adj[j].append(i)
    best = 0
    for s in range(n):
        dist = [-1] * n
        dist[s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        if min(dist) < 0:
            raise DisconnectedError("diameter of a disconnected selection is infinite")
        best = max(best, max(dist))
    return best


def build_diameter_model(graph: WeightedGraph, spec: DiameterSpec, level: float, vectors,
                         root: int = ROOT_VERTEX) -> SpectralModel:
    """Degree-minimising level model for trees of diameter at most D.

    Vertex n is the source.  Eigen rows (at ``level``) involve original edges
    only; source edges exist just to carry the hop-counting flow.
    """
    n = graph.n
    D = spec.effective(n)
    model = SpectralModel(graph, "diameter_bsdp")
    add_edge_variables(model)
    src = n
    source_vars = [model.add_variable(f"s_{j}", BINARY) for j in range(n)]
    arcs = [(i, j) for i, j, _ in graph.edges] + [(j, src) for j in range(n)]
    caps = model.edge_vars.tolist() + source_vars
    flows = build_flow_constraints(model, n + 1, arcs, caps, source=src, commodities=list(range(n)))
    model.flow_vars = flows
    model.add_constraint([(c, 1.0) for c in caps], "==", float(n), "augmented_tree")
    model.add_constraint([(c, 1.0) for c in source_vars], "==", 1.0, "one_source_edge")
    limit = D // 2 + 1
    for k in range(n):
        cols = [col for (kk, _, _), col in flows.items() if kk == k]
        model.add_constraint([(c, 1.0) for c in cols], "<=", float(limit), f"hops_{k}")
    for v in vectors:
        model.add_cut(eigen_row(model, v, rhs=level))
    at_root = [k for k, (i, j, _) in enumerate(graph.edges) if root in (i, j)]
    model.set_objective({int(model.edge_vars[k]): 1.0 for k in at_root}, "min")
    return model


def _diameter_start(graph: WeightedGraph, D: int) -> EdgeSelection:
    """Best star (always within any D >= 2), or the maximum spanning tree if it fits and beats it."""
    stars = [star(graph, c) for c in range(graph.n)]
    lam = batch_eigenvalues(graph, np.array([s.indices for s in stars]))[:, 1]
    best = stars[int(np.argmax(lam))]
    best_val = float(lam.max())
    mst = max_spanning_tree(graph)
    if tree_diameter(mst) <= D and algebraic_connectivity(mst) > best_val:
        return mst
    return best


def solve_diameter(graph: WeightedGraph, spec: DiameterSpec, eps: float = DEFAULT_EPS,
                   vectors=None, seed: int = 0) -> SolveReport:
    """Best tree of diameter at most D, within ``eps``, by level search over the flow model."""
    if graph.n < 3:
        raise InvalidInputError("need at least three vertices")
    D = spec.effective(graph.n)
    if vectors is None:
        vectors, _ = random_tree_vectors(graph, DEFAULT_SEED_VECTORS, seed)
    start = _diameter_start(graph, D)

    def build(level, pool):
        return build_diameter_model(graph, spec, level, pool)

    rep = level_search(graph, start, eps, vectors, "flow", build=build, name="diameter")
    rep.extra["diameter"] = tree_diameter(rep.selection)
    rep.extra["D"] = D
    return rep


# ---- power ------------------------------------------------------------------

def tree_power(sel: EdgeSelection) -> float:
    """lambda_2 + lambda_3 of the selection's Laplacian."""
    vals = spectrum(sel.graph, sel).values
    return float(vals[1] + vals[2])


def min_power(sel: EdgeSelection, R: float = 1.0) -> float:
    """Least total power R^2 (lambda_2 + lambda_3) over admissible placements."""
    if sel.graph.n < 3:
        raise InvalidInputError("placement needs at least three vertices")
    if not is_connected(sel):
        raise DisconnectedError("selection is disconnected")
    return R * R * tree_power(sel)


def optimal_placement(sel: EdgeSelection, R: float = 1.0) -> np.ndarray:
    """Coordinates (n x 3) reaching the minimum power: columns R v_2, R v_3 and zeros."""
    if sel.graph.n < 3:
        raise InvalidInputError("placement needs at least three vertices")
    if not is_connected(sel):
        raise DisconnectedError("selection is disconnected")
    vecs = spectrum(sel.graph, sel).vectors
    a = vecs[:, 1] - vecs[:, 1].mean()
    a /= np.linalg.norm(a)
    b = vecs[:, 2] - vecs[:, 2].mean()
    b -= (a @ b) * a
    b /= np.linalg.norm(b)
    return np.column_stack([R * a, R * b, np.zeros(sel.graph.n)])


def placement_power(sel: EdgeSelection, coords) -> float:
    """Sum over chosen edges of w_ij times squared distance."""
    coords = np.asarray(coords, dtype=float)
    g = sel.graph
    idx = list(sel.indices)
    d = coords[g.tails[idx]] - coords[g.heads[idx]]
    return float(g.weights[idx] @ np.einsum("ij,ij->i", d, d))


def _power_ok(graph, rows, ev, pmax):
    return ev[:, 1] + ev[:, 2] <= pmax + POWER_TOL


def power_feasible_start(graph: WeightedGraph, spec: PowerSpec, count: int = POWER_INIT_TREES):
    """Best power-feasible tree among the ``count`` lightest; None if there is none."""
    trees = enumerate_increasing(graph, count)
    rows = np.array([t.indices for t in trees], dtype=np.int64)
    ev = batch_eigenvalues(graph, rows)
    ok = np.flatnonzero(_power_ok(graph, rows, ev, spec.P_max))
    if ok.size == 0:
        return None
    best = ok[np.argmax(ev[ok, 1])]
    return trees[best]


def _elimination_row(model: SpectralModel, sel: EdgeSelection):
    return model.make_row([(int(model.edge_vars[k]), 1.0) for k in sel.indices], "<=",
                          float(model.graph.n - 2), "elim")


def _power_separator(model: SpectralModel, spec: PowerSpec, eliminated: list):
    """Integral trees over budget get a row that removes exactly them."""
    g = model.graph

    def separate(values, integral):
        if not integral:
            return []
        sel = model.selection(values)
        if not sel.is_spanning_tree():
            return []  # connectivity rows come first
        if tree_power(sel) <= spec.P_max + POWER_TOL:
            return []
        eliminated.append(sel)
        return [_elimination_row(model, sel)]

    return separate


def solve_power(graph: WeightedGraph, spec: PowerSpec, vectors=None, seed: int = 0,
                connectivity: str = "cutset", cut_cap: int = DEFAULT_CUT_CAP) -> SolveReport:
    """Best tree with lambda_2 + lambda_3 <= P_max, by branch-and-cut on gamma.

    The best budget-respecting tree among the 10,000 lightest is the starting
    incumbent when one exists.  Raises InfeasibleError if no tree fits.
    """
    if graph.n < 3:
        raise InvalidInputError("need at least three vertices")
    if vectors is None:
        vectors, _ = random_tree_vectors(graph, DEFAULT_SEED_VECTORS, seed)
    start = power_feasible_start(graph, spec)
    model = build_relaxed_misdp(graph, FormulationConfig(vectors=vectors, connectivity=connectivity))
    # lambda_2 <= (lambda_2 + lambda_3) / 2 for every admissible tree
    model.variables[model.gamma_var].ub = min(model.variables[model.gamma_var].ub,
                                              spec.P_max / 2.0 + POWER_TOL)
    log: list = []
    eliminated: list = []
    model.separators.append(_psd_separator(model, log, cut_cap))
    model.separators.append(_power_separator(model, spec, eliminated))
    trace: list = []
    inc_val = algebraic_connectivity(start) if start is not None else None
    cutoff = None if inc_val is None else inc_val - 1e-9 * (1.0 + abs(inc_val))

    def progress(nodes, bound, incumbent):
        lower = incumbent if inc_val is None else (inc_val if incumbent is None else max(inc_val, incumbent))
        if not trace or trace[-1]["upper"] != bound or trace[-1]["lower"] != lower:
            trace.append({"iteration": nodes, "upper": bound, "lower": lower})

    try:
        sol = solve_milp(model, cutoff=cutoff, progress=progress)
    except BudgetExceeded:
        if start is None:
            raise
        return SolveReport("power", inc_val, start, trace, len(log) + len(eliminated), 1,
                           "iteration-cap", log)
    if sol.has_solution:
        sel = model.selection(sol.values)
        lam = algebraic_connectivity(sel)
        if inc_val is not None and lam < inc_val:
            sel, lam = start, inc_val
    elif start is not None:
        sel, lam = start, inc_val
    else:
        raise InfeasibleError("no spanning tree fits the power budget")
    rep = SolveReport("power", lam, sel, trace, len(log) + len(eliminated), 1, "optimal", log)
    rep.extra.update({"power": tree_power(sel), "P_max": spec.P_max,
                      "eliminated": len(eliminated), "nodes": sol.nodes})
    return rep


def power_lower_bound(graph: WeightedGraph, spec: PowerSpec, eps: float = DEFAULT_EPS,
                      time_budget: Optional[float] = None, max_levels: int = 100_000,
                      vectors=None, seed: int = 0, connectivity: str = "cutset") -> SolveReport:
    """Anytime level search over power-feasible trees.

    Starts from the best budget-respecting tree among the 10,000 lightest
    and raises the level past every new incumbent.  Stops when a level is
    infeasible (the incumbent is then within ``eps`` of optimal) or when the
    time or level budget runs out.  ``extra["gap_pct"]`` compares the final
    incumbent with the trivial bound P_max / 2.
    """
    if graph.n < 3:
        raise InvalidInputError("need at least three vertices")
    start = power_feasible_start(graph, spec)
    if start is None:
        raise InfeasibleError(f"no tree among the {POWER_INIT_TREES} lightest fits the power budget")
    if vectors is None:
        vectors, _ = random_tree_vectors(graph, DEFAULT_SEED_VECTORS, seed)
    eliminated: list = []
    deadline = None if time_budget is None else time.monotonic() + time_budget

    def build(level, pool):
        model = build_level_model(graph, level, pool, connectivity)
        for sel in eliminated:
            model.add_cut(_elimination_row(model, sel))
        return model

    def check(model):
        return _power_separator(model, spec, eliminated)

    rep = level_search(graph, start, eps, vectors, connectivity, build=build, check=check,
                       name="power-lower-bound", max_levels=max_levels, deadline=deadline)
    half = spec.P_max / 2.0
    rep.extra.update({"power": tree_power(rep.selection), "P_max": spec.P_max,
                      "gap_pct": (half - rep.optimum) / half * 100.0,
                      "eliminated": len(eliminated)})
    return rep
