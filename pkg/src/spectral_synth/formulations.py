"""Relaxed mixed-integer models for the connectivity-maximising tree problem.

The semidefinite constraint  L(x) >= gamma (I - 11^T/n)  is replaced by the
linear rows  sum_e x_e w_e (v_i - v_j)^2 >= gamma  for unit vectors v
orthogonal to the all-ones vector.  Every such row is valid for all trees
whose algebraic connectivity is at least gamma, so rows can be pooled
freely and added on demand.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidInputError
from .graph import EdgeSelection, WeightedGraph, components, edge_quadratic_forms, laplacian
from .milp import BINARY, CONTINUOUS, Constraint, MilpModel
from .spectral import jacobi_eigh

CONNECTIVITY_MODES = ("none", "cutset", "flow")
PSD_TOL = 1e-7
MIN_CUT_TOL = 1e-6


@dataclass
class FormulationConfig:
    budget: Optional[int] = None  # number of edges; None means n - 1 (a tree)
    vectors: list = field(default_factory=list)
    connectivity: str = "flow"
    source: int = 0

    def __post_init__(self):
        if self.connectivity not in CONNECTIVITY_MODES:
            raise InvalidInputError(f"connectivity must be one of {CONNECTIVITY_MODES}")


class SpectralModel(MilpModel):
    """MilpModel that remembers which columns are edges and which is gamma."""

    def __init__(self, graph: WeightedGraph, name: str = "spectral"):
        super().__init__(name)
        self.graph = graph
        self.edge_vars = np.zeros(0, dtype=np.int64)
        self.gamma_var: Optional[int] = None
        self.flow_vars: dict = {}

    def selection(self, values) -> EdgeSelection:
        return EdgeSelection.from_vector(self.graph, np.asarray(values)[self.edge_vars])

    def edge_values(self, values) -> np.ndarray:
        return np.asarray(values)[self.edge_vars]


def normalise_cut_vector(v) -> np.ndarray:
    """Project out the all-ones direction and scale to unit length."""
    v = np.asarray(v, dtype=float)
    v = v - v.mean()
    nrm = np.linalg.norm(v)
    if nrm < 1e-12:
        raise InvalidInputError("cut vector is parallel to the all-ones vector")
    return v / nrm


def eigen_cut_coefficients(graph: WeightedGraph, v) -> np.ndarray:
    """Edge coefficients w_e (v_i - v_j)^2 of the row generated by v."""
    return edge_quadratic_forms(graph, normalise_cut_vector(v))[0]


def gamma_upper_limit(graph: WeightedGraph) -> float:
    return 2.0 * float(graph.weighted_degrees().max())


def add_edge_variables(model: SpectralModel, prefix: str = "x"):
    g = model.graph
    model.edge_vars = np.array([model.add_variable(f"{prefix}_{i}_{j}", BINARY) for i, j, _ in g.edges])


def eigen_row(model: SpectralModel, v, rhs: Optional[float] = None) -> Constraint:
    """Row sum_e a_e x_e >= gamma, or >= rhs when the model has no gamma column."""
    a = eigen_cut_coefficients(model.graph, v)
    coeffs = dict(zip(model.edge_vars.tolist(), a.tolist()))
    if rhs is None:
        coeffs[model.gamma_var] = -1.0
        return model.make_row(coeffs, ">=", 0.0, "eig")
    return model.make_row(coeffs, ">=", float(rhs), "eig")


def build_flow_constraints(model: MilpModel, n: int, arcs, capacity_vars, source: int = 0,
                           commodities=None, prefix: str = "f") -> dict:
    """Single-source multicommodity flow that forces the capacity edges to connect.

    Commodity k ships one unit from ``source`` to vertex k.  Each undirected
    edge ``arcs[t] = (i, j)`` carries at most ``x[capacity_vars[t]]`` of a
    commodity in total over both directions.  Arcs into the source and out
    of a commodity's own sink are left out: a path never needs them.
    Returns ``{(k, i, j): column}``.
    """
    if commodities is None:
        commodities = [k for k in range(n) if k != source]
    flows = {}
    for k in commodities:
        for i, j in arcs:
            for a, b in ((i, j), (j, i)):
                if b == source or a == k:
                    continue
                flows[(k, a, b)] = model.add_variable(f"{prefix}_{k}_{a}_{b}", CONTINUOUS, 0.0, 1.0)
    for k in commodities:
        out_arcs = {v: [] for v in range(n)}
        in_arcs = {v: [] for v in range(n)}
        for (kk, i, j), col in flows.items():
            if kk != k:
                continue
            out_arcs[i].append(col)
            in_arcs[j].append(col)
        for v in range(n):
            if v == source:
                continue  # implied by the other balances
            coeffs = [(c, 1.0) for c in out_arcs[v]] + [(c, -1.0) for c in in_arcs[v]]
            model.add_constraint(coeffs, "==", -1.0 if v == k else 0.0, f"bal_{k}_{v}")
        for t, (i, j) in enumerate(arcs):
            cols = [flows[key] for key in ((k, i, j), (k, j, i)) if key in flows]
            model.add_constraint([(c, 1.0) for c in cols] + [(capacity_vars[t], -1.0)], "<=", 0.0,
                                 f"cap_{k}_{i}_{j}")
    return flows


def stoer_wagner(n: int, cap: np.ndarray):
    """Global minimum cut of a symmetric capacity matrix: (value, side)."""
    if n < 2:
        raise InvalidInputError("min cut needs two vertices")
    w = np.array(cap, dtype=float)
    groups = [[v] for v in range(n)]
    alive = list(range(n))
    best_val, best_side = np.inf, None
    while len(alive) > 1:
        idx = np.array(alive)
        conn = np.zeros(n)
        added = np.zeros(n, dtype=bool)
        order = []
        for _ in range(len(alive)):
            masked = np.where(added[idx], -np.inf, conn[idx])
            v = int(idx[np.argmax(masked)])
            added[v] = True
            order.append(v)
            conn += w[v]
        s, t = order[-2], order[-1]
        # cut of the phase: everything merged into t against the rest
        cut_val = float(w[t, idx].sum() - w[t, t])
        if cut_val < best_val:
            best_val, best_side = cut_val, sorted(groups[t])
        groups[s].extend(groups[t])
        w[s] += w[t]
        w[:, s] += w[:, t]
        w[s, s] = 0.0
        w[t] = 0.0
        w[:, t] = 0.0
        alive.remove(t)
    return best_val, best_side


def edge_capacity_matrix(graph: WeightedGraph, x) -> np.ndarray:
    cap = np.zeros((graph.n, graph.n))
    cap[graph.tails, graph.heads] = x
    cap[graph.heads, graph.tails] = x
    return cap


ENUMERATED_CUT_MAX_N = 12
_crossing_cache: dict = {}


def _crossing_matrix(graph: WeightedGraph) -> np.ndarray:
    """Rows: every vertex set containing vertex 0 except V; columns: edges it cuts."""
    key = (graph.n, graph.tails.tobytes(), graph.heads.tobytes())
    if key not in _crossing_cache:
        n = graph.n
        masks = np.arange(2 ** (n - 1) - 1, dtype=np.int64) * 2 + 1  # bit 0 always set
        bits = (masks[:, None] >> np.arange(n)) & 1
        _crossing_cache[key] = (bits[:, graph.tails] != bits[:, graph.heads]).astype(float), bits
    return _crossing_cache[key]


def enumerated_min_cut(graph: WeightedGraph, x):
    """Global minimum cut by checking all 2^(n-1) - 1 bipartitions: (value, side)."""
    cross, bits = _crossing_matrix(graph)
    vals = cross @ np.asarray(x, dtype=float)
    k = int(np.argmin(vals))
    return float(vals[k]), np.flatnonzero(bits[k]).tolist()


def min_cut_violation(graph: WeightedGraph, x, threshold: float = 1.0 - MIN_CUT_TOL):
    """Vertex set S whose cut capacity under x is below the threshold, else None."""
    if graph.n <= ENUMERATED_CUT_MAX_N:
        val, side = enumerated_min_cut(graph, x)
    else:
        val, side = stoer_wagner(graph.n, edge_capacity_matrix(graph, np.asarray(x, dtype=float)))
    if val < threshold:
        return side
    return None


def cut_row(model: SpectralModel, side) -> Constraint:
    inside = np.zeros(model.graph.n, dtype=bool)
    inside[list(side)] = True
    crossing = inside[model.graph.tails] != inside[model.graph.heads]
    cols = model.edge_vars[crossing]
    return model.make_row([(c, 1.0) for c in cols.tolist()], ">=", 1.0, "cutset")


def cutset_separator(model: SpectralModel):
    g = model.graph

    def separate(values, integral):
        x = values[model.edge_vars]
        if integral:
            comps = components(g.n, [(g.edges[k][0], g.edges[k][1]) for k in np.flatnonzero(x > 0.5)])
            if len(comps) == 1:
                return []
            return [cut_row(model, c) for c in comps]
        side = min_cut_violation(g, x)
        return [] if side is None else [cut_row(model, side)]

    return separate


def add_connectivity(model: SpectralModel, mode: str, source: int = 0):
    g = model.graph
    if mode == "flow":
        arcs = [(i, j) for i, j, _ in g.edges]
        model.flow_vars = build_flow_constraints(model, g.n, arcs, model.edge_vars.tolist(), source)
    elif mode == "cutset":
        model.separators.append(cutset_separator(model))


def add_cardinality(model: SpectralModel, budget: Optional[int]):
    n = model.graph.n
    q = n - 1 if budget is None else int(budget)
    if q < n - 1:
        raise InvalidInputError("budget below n - 1 cannot connect the graph")
    sense = "==" if q == n - 1 else "<="
    model.add_constraint([(c, 1.0) for c in model.edge_vars.tolist()], sense, float(q), "cardinality")


def build_relaxed_misdp(graph: WeightedGraph, cfg: FormulationConfig) -> SpectralModel:
    """max gamma over trees, with one eigen row per pool vector.

    Pool rows go to the model's cut pool, so the solver only carries the
    ones that bind.
    """
    if graph.n < 2:
        raise InvalidInputError("need at least two vertices")
    model = SpectralModel(graph, "relaxed_misdp")
    add_edge_variables(model)
    model.gamma_var = model.add_variable("gamma", CONTINUOUS, 0.0, gamma_upper_limit(graph))
    add_cardinality(model, cfg.budget)
    add_connectivity(model, cfg.connectivity, cfg.source)
    for v in cfg.vectors:
        model.add_cut(eigen_row(model, v))
    model.set_objective({model.gamma_var: 1.0}, "max")
    return model


@dataclass
class PsdCheck:
    min_eigenvalue: float
    vector: Optional[np.ndarray]

    @property
    def violated(self) -> bool:
        return self.vector is not None


def psd_violation(graph: WeightedGraph, x, gamma: float, tol: float = PSD_TOL) -> PsdCheck:
    """Test L(x) - gamma (I - 11^T/n) >= 0; on failure return the offending eigenvector."""
    if isinstance(x, EdgeSelection):
        x = x.x
    n = graph.n
    M = laplacian(graph, x) - gamma * (np.eye(n) - np.full((n, n), 1.0 / n))
    spec = jacobi_eigh(M)
    lam = float(spec.values[0])
    if lam < -tol * (1.0 + abs(gamma)):
        return PsdCheck(lam, normalise_cut_vector(spec.vectors[:, 0]))
    return PsdCheck(lam, None)
