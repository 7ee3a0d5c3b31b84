"""Weighted undirected graphs, edge selections and weighted Laplacians."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInputError


class UnionFind:
    __slots__ = ("parent", "rank", "count")

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n
        self.count = n

    def find(self, a: int) -> int:
        parent = self.parent
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        self.count -= 1
        return True


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected graph on vertices 0..n-1 with positive edge weights.

    Edges are stored as ``(i, j, w)`` with ``i < j`` and sorted by ``(i, j)``;
    the position of an edge in that order is its edge index.
    """

    n: int
    edges: tuple = field()

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise InvalidInputError(f"vertex count must be a positive integer, got {self.n!r}")
        cleaned = []
        seen = set()
        for e in self.edges:
            if len(e) != 3:
                raise InvalidInputError(f"edge must be (i, j, w), got {e!r}")
            i, j, w = int(e[0]), int(e[1]), float(e[2])
            if i > j:
                i, j = j, i
            if i == j or i < 0 or j >= self.n:
                raise InvalidInputError(f"bad edge endpoints ({i}, {j}) for n={self.n}")
            if not np.isfinite(w) or w <= 0:
                raise InvalidInputError(f"edge ({i}, {j}) has non-positive weight {w}")
            if (i, j) in seen:
                raise InvalidInputError(f"duplicate edge ({i}, {j})")
            seen.add((i, j))
            cleaned.append((i, j, w))
        cleaned.sort()
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "edges", tuple(cleaned))

    @classmethod
    def from_adjacency(cls, adj) -> "WeightedGraph":
        a = np.asarray(adj, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidInputError("adjacency matrix must be square")
        if not np.allclose(a, a.T, rtol=0, atol=1e-12):
            raise InvalidInputError("adjacency matrix must be symmetric")
        n = a.shape[0]
        edges = [(i, j, a[i, j]) for i in range(n) for j in range(i + 1, n) if a[i, j] > 0]
        return cls(n, tuple(edges))

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def tails(self) -> np.ndarray:
        return np.array([e[0] for e in self.edges], dtype=np.int64)

    @cached_property
    def heads(self) -> np.ndarray:
        return np.array([e[1] for e in self.edges], dtype=np.int64)

    @cached_property
    def weights(self) -> np.ndarray:
        return np.array([e[2] for e in self.edges], dtype=float)

    @cached_property
    def index(self) -> dict:
        return {(i, j): k for k, (i, j, _) in enumerate(self.edges)}

    def edge_index(self, i: int, j: int) -> int:
        if i > j:
            i, j = j, i
        try:
            return self.index[(i, j)]
        except KeyError:
            raise InvalidInputError(f"({i}, {j}) is not an edge of the graph") from None

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        a[self.tails, self.heads] = self.weights
        a[self.heads, self.tails] = self.weights
        return a

    def weighted_degrees(self) -> np.ndarray:
        return self.adjacency().sum(axis=1)

    def is_complete(self) -> bool:
        return self.m == self.n * (self.n - 1) // 2

    def to_dict(self) -> dict:
        return {"n": self.n, "edges": [[i, j, w] for i, j, w in self.edges]}

    @classmethod
    def from_dict(cls, data: dict) -> "WeightedGraph":
        if not isinstance(data, dict) or "n" not in data or "edges" not in data:
            raise InvalidInputError("graph JSON needs keys 'n' and 'edges'")
        return cls(int(data["n"]), tuple(tuple(e) for e in data["edges"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "WeightedGraph":
        return cls.from_dict(json.loads(text))


class EdgeSelection:
    """A subset of the edges of a graph, held as sorted edge indices.

    The binary vector form is available through :attr:`x`.
    """

    __slots__ = ("graph", "indices", "_x")

    def __init__(self, graph: WeightedGraph, indices: Iterable[int]):
        idx = tuple(sorted(int(k) for k in indices))
        if len(set(idx)) != len(idx):
            raise InvalidInputError("edge selection contains repeated edges")
        if idx and (idx[0] < 0 or idx[-1] >= graph.m):
            raise InvalidInputError("edge index out of range")
        self.graph = graph
        self.indices = idx
        self._x = None

    @classmethod
    def from_vector(cls, graph: WeightedGraph, x, tol: float = 0.5) -> "EdgeSelection":
        x = np.asarray(x, dtype=float)
        if x.shape != (graph.m,):
            raise InvalidInputError(f"selection vector must have length {graph.m}")
        return cls(graph, np.flatnonzero(x > tol))

    @classmethod
    def from_pairs(cls, graph: WeightedGraph, pairs: Iterable[Sequence[int]]) -> "EdgeSelection":
        return cls(graph, [graph.edge_index(int(p[0]), int(p[1])) for p in pairs])

    @property
    def x(self) -> np.ndarray:
        if self._x is None:
            v = np.zeros(self.graph.m)
            v[list(self.indices)] = 1.0
            self._x = v
        return self._x

    @property
    def pairs(self) -> list:
        return [(self.graph.edges[k][0], self.graph.edges[k][1]) for k in self.indices]

    @property
    def size(self) -> int:
        return len(self.indices)

    def weight(self) -> float:
        return float(sum(self.graph.edges[k][2] for k in self.indices))

    def is_spanning_tree(self) -> bool:
        return self.size == self.graph.n - 1 and is_connected(self)

    def __eq__(self, other):
        if not isinstance(other, EdgeSelection):
            return NotImplemented
        return self.indices == other.indices and self.graph == other.graph

    def __hash__(self):
        return hash(self.indices)

    def __lt__(self, other: "EdgeSelection"):
        return self.indices < other.indices

    def __repr__(self):
        return f"EdgeSelection({self.pairs})"


def laplacian(graph: WeightedGraph, x=None) -> np.ndarray:
    """Weighted Laplacian sum_e x_e w_e (e_i - e_j)(e_i - e_j)^T.

    ``x`` may be an EdgeSelection, a (possibly fractional) vector over the
    edges, or None for the full graph.
    """
    if isinstance(x, EdgeSelection):
        x = x.x
    if x is None:
        x = np.ones(graph.m)
    x = np.asarray(x, dtype=float)
    if x.shape != (graph.m,):
        raise InvalidInputError(f"selection vector must have length {graph.m}")
    n = graph.n
    wx = graph.weights * x
    L = np.zeros((n, n))
    np.add.at(L, (graph.tails, graph.heads), -wx)
    L += L.T
    L[np.diag_indices(n)] = -L.sum(axis=1)
    return L


def edge_quadratic_forms(graph: WeightedGraph, vectors) -> np.ndarray:
    """Return v^T L_e v = w_e (v_i - v_j)^2 for each vector (rows) and edge (cols)."""
    v = np.atleast_2d(np.asarray(vectors, dtype=float))
    d = v[:, graph.tails] - v[:, graph.heads]
    return graph.weights * d * d


def is_connected(sel: EdgeSelection) -> bool:
    g = sel.graph
    uf = UnionFind(g.n)
    for k in sel.indices:
        uf.union(g.edges[k][0], g.edges[k][1])
    return uf.count == 1


def components(n: int, pairs: Iterable[Sequence[int]]) -> list:
    """Connected components (sorted lists of vertices) of the graph on n vertices."""
    uf = UnionFind(n)
    for i, j in pairs:
        uf.union(i, j)
    groups: dict = {}
    for v in range(n):
        groups.setdefault(uf.find(v), []).append(v)
    return sorted(groups.values())
