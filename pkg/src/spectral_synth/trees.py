"""Spanning-tree enumeration: greedy, ranked by weight, and exhaustive."""
from __future__ import annotations

import heapq
import math
from typing import Callable, Iterator

import numpy as np

from .errors import DisconnectedError, InfeasibleError, InvalidInputError
from .graph import EdgeSelection, UnionFind, WeightedGraph
from .spectral import batch_eigenvalues

MAX_EXHAUSTIVE_N = 9
TIE_RTOL = 1e-9


def _edge_weights(graph: WeightedGraph, weight_fn) -> np.ndarray:
    if weight_fn is None:
        return graph.weights
    if callable(weight_fn):
        return np.array([float(weight_fn(i, j, w)) for i, j, w in graph.edges])
    w = np.asarray(weight_fn, dtype=float)
    if w.shape != (graph.m,):
        raise InvalidInputError(f"need one weight per edge ({graph.m})")
    return w


def _kruskal(n, tails, heads, order, include=(), exclude=frozenset()):
    uf = UnionFind(n)
    chosen = []
    for k in include:
        if not uf.union(tails[k], heads[k]):
            return None
        chosen.append(k)
    for k in order:
        if uf.count == 1:
            break
        if k in exclude or k in include:
            continue
        if uf.union(tails[k], heads[k]):
            chosen.append(k)
    if uf.count != 1:
        return None
    chosen.sort()
    return tuple(chosen)


def _greedy_order(weights: np.ndarray) -> list:
    # heaviest first, lowest edge index among equal weights
    return sorted(range(len(weights)), key=lambda k: (-weights[k], k))


def max_spanning_tree(graph: WeightedGraph, weight_fn=None) -> EdgeSelection:
    """Kruskal's algorithm for a maximum-weight spanning tree.

    ``weight_fn`` is either None (edge weights), an array with one value per
    edge, or a callable ``(i, j, w) -> float``.  Equal weights are resolved
    by the lower edge index.
    """
    w = _edge_weights(graph, weight_fn)
    tree = _kruskal(graph.n, graph.tails.tolist(), graph.heads.tolist(), _greedy_order(w))
    if tree is None:
        raise DisconnectedError("graph has no spanning tree")
    return EdgeSelection(graph, tree)


def min_spanning_tree(graph: WeightedGraph) -> EdgeSelection:
    return max_spanning_tree(graph, -graph.weights)


def _ranked_tree_tuples(graph: WeightedGraph, weights: np.ndarray) -> Iterator[tuple]:
    """Yield (weight, tree) by non-increasing weight; ties by smaller edge tuple.

    Lawler-style partitioning: every queued subproblem fixes some edges in and
    some out, and is represented by its own best tree.
    """
    n = graph.n
    tails = graph.tails.tolist()
    heads = graph.heads.tolist()
    wl = weights.tolist()
    order = _greedy_order(weights)
    rank = {k: r for r, k in enumerate(order)}

    def tree_weight(t):
        return math.fsum(wl[k] for k in t)

    first = _kruskal(n, tails, heads, order)
    if first is None:
        return
    heap = [(-tree_weight(first), first, (), frozenset())]
    while heap:
        negw, tree, inc, exc = heapq.heappop(heap)
        yield -negw, tree
        inc_set = set(inc)
        free = sorted((k for k in tree if k not in inc_set), key=rank.__getitem__)
        forced = list(inc)
        for k in free:
            child_exc = exc | {k}
            child = _kruskal(n, tails, heads, order, tuple(forced), child_exc)
            if child is not None:
                heapq.heappush(heap, (-tree_weight(child), child, tuple(forced), child_exc))
            forced.append(k)


def enumerate_decreasing(graph: WeightedGraph, count: int, weight_fn=None) -> list:
    """The ``count`` heaviest spanning trees, heaviest first."""
    if count < 0:
        raise InvalidInputError("count must be non-negative")
    w = _edge_weights(graph, weight_fn)
    out = []
    if count == 0:
        return out
    for _, tree in _ranked_tree_tuples(graph, w):
        out.append(EdgeSelection(graph, tree))
        if len(out) >= count:
            break
    return out


def enumerate_increasing(graph: WeightedGraph, count: int) -> list:
    """The ``count`` lightest spanning trees, starting from the minimum spanning tree."""
    return enumerate_decreasing(graph, count, -graph.weights)


def _pair_lookup(graph: WeightedGraph) -> np.ndarray:
    lut = np.full((graph.n, graph.n), -1, dtype=np.int64)
    lut[graph.tails, graph.heads] = np.arange(graph.m)
    lut[graph.heads, graph.tails] = np.arange(graph.m)
    return lut


def _prufer_decode(codes: np.ndarray, n: int) -> np.ndarray:
    """Decode Pruefer codes (given as integers in base n) into endpoint arrays."""
    b = len(codes)
    seq = np.empty((b, n - 2), dtype=np.int64)
    rest = codes.copy()
    for t in range(n - 3, -1, -1):
        seq[:, t] = rest % n
        rest //= n
    deg = np.ones((b, n), dtype=np.int64)
    rows = np.arange(b)
    for t in range(n - 2):
        deg[rows, seq[:, t]] += 1
    ends = np.empty((b, n - 1, 2), dtype=np.int64)
    for t in range(n - 2):
        leaf = np.argmax(deg == 1, axis=1)
        ends[:, t, 0] = leaf
        ends[:, t, 1] = seq[:, t]
        deg[rows, leaf] -= 1
        deg[rows, seq[:, t]] -= 1
    last = np.argsort(deg != 1, axis=1, kind="stable")[:, :2]
    ends[:, n - 2, 0] = last[:, 0]
    ends[:, n - 2, 1] = last[:, 1]
    return ends


def spanning_tree_arrays(graph: WeightedGraph, chunk: int = 200_000) -> Iterator[np.ndarray]:
    """Yield every spanning tree as rows of sorted edge indices, in chunks."""
    n = graph.n
    if n > MAX_EXHAUSTIVE_N:
        raise InvalidInputError(f"exhaustive enumeration is limited to n <= {MAX_EXHAUSTIVE_N}")
    if n == 1:
        yield np.zeros((1, 0), dtype=np.int64)
        return
    if n == 2:
        if graph.m == 1:
            yield np.zeros((1, 1), dtype=np.int64)
        return
    lut = _pair_lookup(graph)
    total = n ** (n - 2)
    for start in range(0, total, chunk):
        codes = np.arange(start, min(total, start + chunk), dtype=np.int64)
        ends = _prufer_decode(codes, n)
        idx = lut[ends[:, :, 0], ends[:, :, 1]]
        keep = (idx >= 0).all(axis=1)
        if not keep.any():
            continue
        yield np.sort(idx[keep], axis=1)


def all_spanning_trees(graph: WeightedGraph) -> Iterator[EdgeSelection]:
    for block in spanning_tree_arrays(graph):
        for row in block:
            yield EdgeSelection(graph, row.tolist())


def spanning_tree_count(graph: WeightedGraph) -> int:
    """Matrix-tree theorem count (unit weights)."""
    if graph.n == 1:
        return 1
    a = np.zeros((graph.n, graph.n))
    a[graph.tails, graph.heads] = 1.0
    a += a.T
    lap = np.diag(a.sum(axis=1)) - a
    return int(round(np.linalg.det(lap[1:, 1:])))


def tree_diameters(n: int, ends: np.ndarray) -> np.ndarray:
    """Hop diameter of each tree given as (B, n-1, 2) endpoint arrays."""
    b = ends.shape[0]
    if n == 1:
        return np.zeros(b, dtype=np.int64)
    adj = np.zeros((b, n, n), dtype=np.int64)
    rows = np.arange(b)[:, None]
    adj[rows, ends[:, :, 0], ends[:, :, 1]] = 1
    adj[rows, ends[:, :, 1], ends[:, :, 0]] = 1
    reach = np.broadcast_to(np.eye(n, dtype=np.int64), (b, n, n)).copy()
    diam = np.zeros(b, dtype=np.int64)
    done = np.zeros(b, dtype=bool)
    for d in range(1, n):
        reach = np.minimum(reach + reach @ adj, 1)
        full = reach.all(axis=(1, 2)) & ~done
        diam[full] = d
        done |= full
        if done.all():
            break
    return diam


def power_filter(pmax: float, tol: float = 1e-6) -> Callable:
    """Keep trees with lambda_2 + lambda_3 <= pmax."""

    def keep(graph, trees, eigvals):
        if graph.n < 3:
            return eigvals[:, 1] <= pmax + tol
        return eigvals[:, 1] + eigvals[:, 2] <= pmax + tol

    return keep


def diameter_filter(max_diameter: int) -> Callable:
    def keep(graph, trees, eigvals):
        ends = np.stack([graph.tails[trees], graph.heads[trees]], axis=2)
        return tree_diameters(graph.n, ends) <= max_diameter

    return keep


def brute_force_optimum(graph: WeightedGraph, filter=None):
    """Exhaustively find the tree of largest algebraic connectivity.

    ``filter(graph, trees, eigvals) -> bool mask`` restricts the candidates.
    Returns ``(lambda_2, EdgeSelection)``; among trees whose value ties the
    maximum (relative 1e-9) the lexicographically smallest edge set wins.
    """
    if graph.n < 2:
        raise InvalidInputError("need at least two vertices")
    best_val = -np.inf
    best_rows = []
    for block in spanning_tree_arrays(graph):
        ev = batch_eigenvalues(graph, block)
        lam2 = ev[:, 1]
        if filter is not None:
            mask = np.asarray(filter(graph, block, ev), dtype=bool)
            block, lam2 = block[mask], lam2[mask]
            if len(block) == 0:
                continue
        top = lam2.max()
        if top > best_val:
            best_val = top
        tol = TIE_RTOL * (1.0 + abs(best_val))
        best_rows = [r for r in best_rows if r[0] >= best_val - tol]
        near = np.flatnonzero(lam2 >= best_val - tol)
        best_rows.extend((float(lam2[k]), tuple(block[k].tolist())) for k in near)
    if not best_rows:
        raise InfeasibleError("no spanning tree satisfies the constraints")
    top = max(r[0] for r in best_rows)
    tol = TIE_RTOL * (1.0 + abs(top))
    winner = min(r[1] for r in best_rows if r[0] >= top - tol)
    value = max(r[0] for r in best_rows if r[1] == winner)
    return value, EdgeSelection(graph, winner)
