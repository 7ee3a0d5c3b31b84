"""Edge-exchange local search over spanning trees.

A move deletes k tree edges, which leaves exactly k + 1 components, and
adds k edges that join them back into a tree.  ``two_opt`` searches every
such move for k = 2; ``improved_k_opt`` ranks deletions and additions with
the quadratic form of an extreme eigenvector and only looks at the best.

Feasibility predicates share the brute-force filter signature
``(graph, rows, eigvals) -> bool mask`` so resource limits plug in directly.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InfeasibleError, InvalidInputError
from .graph import EdgeSelection, UnionFind, WeightedGraph, edge_quadratic_forms
from .instances import star
from .spectral import batch_eigenvalues, connectivity_exceeds, tree_laplacians

IMPROVE_TOL = 1e-9
DEFAULT_DEL_FACTOR = 0.15


@dataclass
class HeuristicResult:
    selection: EdgeSelection
    lambda2: float
    trace: list = field(default_factory=list)  # lambda_2 after each accepted move, init first

    @property
    def moves(self) -> int:
        return len(self.trace) - 1


def star_initials(graph: WeightedGraph, count: int = 5) -> list:
    """Stars centred on the ``count`` vertices of largest weighted degree, best first."""
    if count < 1:
        raise InvalidInputError("count must be positive")
    deg = graph.weighted_degrees()
    order = np.lexsort((np.arange(graph.n), -deg))[:count]
    return [star(graph, int(c)) for c in order]


def _check_init(graph, init, feasible):
    if not isinstance(init, EdgeSelection) or not init.is_spanning_tree():
        raise InfeasibleError("initial selection is not a spanning tree")
    row = np.array([init.indices], dtype=np.int64)
    ev = batch_eigenvalues(graph, row)
    if feasible is not None and not bool(np.asarray(feasible(graph, row, ev))[0]):
        raise InfeasibleError("initial tree violates the resource constraint")
    return float(ev[0, 1])


def _component_labels(n: int, pairs) -> tuple:
    uf = UnionFind(n)
    for i, j in pairs:
        uf.union(i, j)
    roots = [uf.find(v) for v in range(n)]
    relabel = {}
    labels = np.array([relabel.setdefault(r, len(relabel)) for r in roots], dtype=np.int64)
    return labels, len(relabel)


def _component_trees(ncomp: int) -> list:
    """Every spanning tree on ``ncomp`` component nodes, as lists of pairs."""
    pairs = list(itertools.combinations(range(ncomp), 2))
    out = []
    for combo in itertools.combinations(pairs, ncomp - 1):
        _, c = _component_labels(ncomp, combo)
        if c == 1:
            out.append(combo)
    return out


def _top_combine(a_idx, a_sc, b_idx, b_sc, cap):
    """Top ``cap`` sums of two scored edge-tuple lists (exact when both are sorted and capped)."""
    sc = (a_sc[:, None] + b_sc[None, :]).ravel()
    idx = np.concatenate([np.repeat(a_idx, len(b_idx), axis=0),
                          np.tile(b_idx, (len(a_idx), 1))], axis=1)
    if cap is not None and len(sc) > cap:
        keep = np.argsort(-sc, kind="stable")[:cap]
        sc, idx = sc[keep], idx[keep]
    return idx, sc


def reconnections(graph: WeightedGraph, labels: np.ndarray, ncomp: int, scores: np.ndarray,
                  cap: Optional[int] = None):
    """Edge sets that join ``ncomp`` components into one tree, best total score first.

    Returns ``(rows, totals)``: each row holds ncomp - 1 edge indices, one per
    edge of some tree on the components.  With ``cap`` only the ``cap`` best
    totals are kept (ties by edge tuple).
    """
    li, lj = labels[graph.tails], labels[graph.heads]
    lo, hi = np.minimum(li, lj), np.maximum(li, lj)
    buckets = {}
    for a, b in itertools.combinations(range(ncomp), 2):
        idx = np.flatnonzero((lo == a) & (hi == b))
        idx = idx[np.lexsort((idx, -scores[idx]))]
        if cap is not None:
            idx = idx[:cap]
        buckets[(a, b)] = idx
    k = ncomp - 1
    rows, totals = [np.zeros((0, k), dtype=np.int64)], [np.zeros(0)]
    for struct in _component_trees(ncomp):
        lists = [buckets[p] for p in struct]
        if any(len(x) == 0 for x in lists):
            continue
        idx = lists[0][:, None]
        sc = scores[lists[0]]
        for nxt in lists[1:]:
            idx, sc = _top_combine(idx, sc, nxt[:, None], scores[nxt], cap)
        rows.append(idx)
        totals.append(sc)
    rows = np.concatenate(rows)
    totals = np.concatenate(totals)
    rows.sort(axis=1)
    if len(rows):
        order = np.lexsort(tuple(rows[:, c] for c in range(k - 1, -1, -1)) + (-totals,))
        rows, totals = rows[order], totals[order]
        if cap is not None:
            rows, totals = rows[:cap], totals[:cap]
    return rows, totals


def _screen(graph, keep, added, rows, level):
    """Mask of candidates (forest ``keep`` plus each row of ``added``) with lambda_2 > level.

    With A = L(forest) - level*I + (level + 1) 11'/n, each candidate is
    A + B W B' for its k added edges.  By inertia additivity it is positive
    definite iff W^-1 + B' A^-1 B has exactly k - neg(A) positive
    eigenvalues, a k-by-k test per candidate.
    """
    n, k = graph.n, added.shape[1]
    a = tree_laplacians(graph, keep[None, :])[0]
    a += (level + 1.0) / n
    a[np.diag_indices(n)] -= level
    vals, vecs = np.linalg.eigh(a)
    if np.abs(vals).min() < 1e-9 * (1.0 + abs(level)):
        return connectivity_exceeds(graph, rows, level)
    neg = int((vals < 0).sum())
    if neg > k:
        return np.zeros(len(rows), dtype=bool)
    g = (vecs / vals) @ vecs.T
    t, h = graph.tails[added], graph.heads[added]
    s = (g[t[:, :, None], t[:, None, :]] - g[t[:, :, None], h[:, None, :]]
         - g[h[:, :, None], t[:, None, :]] + g[h[:, :, None], h[:, None, :]])
    s[:, np.arange(k), np.arange(k)] += 1.0 / graph.weights[added]
    pos = (np.linalg.eigvalsh(s) > 0).sum(axis=1)
    return pos == k - neg


def _best_exchange(graph, tree, removed_pos, lam0, fiedler, feasible, add_scores=None, cap=None):
    """Best strictly-improving feasible tree after deleting ``removed_pos``; None if there is none."""
    tree = np.asarray(tree)
    keep = np.delete(tree, removed_pos)
    labels, ncomp = _component_labels(graph.n, zip(graph.tails[keep], graph.heads[keep]))
    scores = add_scores(keep) if add_scores is not None else np.zeros(graph.m)
    added, _ = reconnections(graph, labels, ncomp, scores, cap)
    if len(added) == 0:
        return None
    removed = tree[list(removed_pos)]
    # the Rayleigh quotient of the current Fiedler vector bounds every candidate
    q = edge_quadratic_forms(graph, fiedler)[0]
    bound = lam0 - q[removed].sum() + q[added].sum(axis=1)
    live = bound > lam0 + IMPROVE_TOL
    same = np.all(np.sort(added, axis=1) == np.sort(removed), axis=1)
    live &= ~same
    if not live.any():
        return None
    added = added[live]
    rows = np.concatenate([np.repeat(keep[None, :], len(added), axis=0), added], axis=1)
    rows.sort(axis=1)
    # cheap screen first, eigenvalues only for the survivors
    rows = rows[_screen(graph, keep, added, rows, lam0)]
    if len(rows) == 0:
        return None
    ev = batch_eigenvalues(graph, rows)
    ok = ev[:, 1] > lam0 + IMPROVE_TOL
    if feasible is not None:
        ok &= np.asarray(feasible(graph, rows, ev), dtype=bool)
    if not ok.any():
        return None
    cand = np.flatnonzero(ok)
    top = ev[cand, 1].max()
    tie = cand[ev[cand, 1] >= top - IMPROVE_TOL * (1.0 + abs(top))]
    best = min(tie, key=lambda r: tuple(rows[r]))
    return rows[best], float(ev[best, 1]), ev[best]


def _fiedler_of(graph, tree):
    _, vecs = np.linalg.eigh(tree_laplacians(graph, np.array([tree]))[0])
    return vecs[:, 1]


def two_opt(graph: WeightedGraph, init: EdgeSelection, feasible: Optional[Callable] = None,
            max_moves: int = 100_000) -> HeuristicResult:
    """Exhaustive 2-exchange hill climbing.

    Edge pairs are scanned in order; the first pair whose best reconnection
    strictly improves is applied and the scan restarts on the new tree.
    Stops at a tree no 2-exchange improves.
    """
    lam = _check_init(graph, init, feasible)
    tree = np.array(init.indices, dtype=np.int64)
    trace = [lam]
    while len(trace) <= max_moves:
        fiedler = _fiedler_of(graph, tree)
        moved = False
        for pos in itertools.combinations(range(len(tree)), 2):
            found = _best_exchange(graph, tree, pos, lam, fiedler, feasible)
            if found is not None:
                tree, lam, _ = found
                trace.append(lam)
                moved = True
                break
        if not moved:
            break
    return HeuristicResult(EdgeSelection(graph, tree.tolist()), lam, trace)


def improved_k_opt(graph: WeightedGraph, init: EdgeSelection, k: int = 2,
                   del_factor: float = DEFAULT_DEL_FACTOR, add_cap: Optional[float] = None,
                   feasible: Optional[Callable] = None, max_moves: int = 100_000) -> HeuristicResult:
    """k-exchange search restricted to spectrally ranked deletions and additions.

    Deletions: k-subsets of tree edges with the smallest total w_e (v_i - v_j)^2,
    v the top eigenvector of the tree's Laplacian; a ``del_factor`` share of
    all C(n-1, k) subsets is tried.  Additions: for each deletion, the
    ``min(add_cap, 5^k)`` reconnections with the largest total score under the
    top eigenvector of the forest left behind.  ``add_cap=math.inf`` lifts
    both caps on additions.
    """
    if k not in (2, 3):
        raise InvalidInputError("k must be 2 or 3")
    if not 0.0 < del_factor <= 1.0:
        raise InvalidInputError("del_factor must lie in (0, 1]")
    if add_cap is None:
        cap = 5 ** k
    elif math.isinf(add_cap):
        cap = None
    else:
        if add_cap < 1:
            raise InvalidInputError("add_cap must be at least 1")
        cap = int(min(add_cap, 5 ** k))
    lam = _check_init(graph, init, feasible)
    tree = np.array(init.indices, dtype=np.int64)
    trace = [lam]
    if graph.n - 1 < k:
        return HeuristicResult(init, lam, trace)

    def add_scores(keep):
        L = tree_laplacians(graph, np.array([keep]))[0]
        _, vecs = np.linalg.eigh(L)
        return edge_quadratic_forms(graph, vecs[:, -1])[0]

    while len(trace) <= max_moves:
        L = tree_laplacians(graph, np.array([tree]))[0]
        vals, vecs = np.linalg.eigh(L)
        del_q = edge_quadratic_forms(graph, vecs[:, -1])[0][tree]
        combos = np.array(list(itertools.combinations(range(len(tree)), k)), dtype=np.int64)
        sums = del_q[combos].sum(axis=1)
        order = np.argsort(sums, kind="stable")
        keep_count = math.ceil(del_factor * len(combos) - 1e-9)
        fiedler = vecs[:, 1]
        moved = False
        for c in order[:keep_count]:
            found = _best_exchange(graph, tree, tuple(combos[c]), lam, fiedler, feasible,
                                   add_scores, cap)
            if found is not None:
                tree, lam, _ = found
                trace.append(lam)
                moved = True
                break
        if not moved:
            break
    return HeuristicResult(EdgeSelection(graph, tree.tolist()), lam, trace)


def multi_start(graph: WeightedGraph, method: str = "two_opt", starts: int = 5, k: int = 2,
                feasible: Optional[Callable] = None, **options) -> HeuristicResult:
    """Run a heuristic from the top stars and keep the best result.

    Infeasible stars are skipped; raises when none of them is feasible.
    """
    best = None
    for init in star_initials(graph, starts):
        try:
            if method == "two_opt":
                res = two_opt(graph, init, feasible)
            elif method == "improved":
                res = improved_k_opt(graph, init, k, feasible=feasible, **options)
            else:
                raise InvalidInputError(f"unknown heuristic {method!r}")
        except InfeasibleError:
            continue
        if best is None or res.lambda2 > best.lambda2 + IMPROVE_TOL:
            best = res
    if best is None:
        raise InfeasibleError("no feasible star to start from")
    return best
