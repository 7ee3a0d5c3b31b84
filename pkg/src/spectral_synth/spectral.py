"""Symmetric eigensolver and the spectral quantities built on it."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DisconnectedError, InvalidInputError
from .graph import EdgeSelection, WeightedGraph, is_connected, laplacian

JACOBI_REL_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


@dataclass(frozen=True)
class Spectrum:
    values: np.ndarray  # ascending
    vectors: np.ndarray  # column k pairs with values[k]
    sweeps: int = 0


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    # largest-magnitude entry positive; argmax picks the lowest index on ties
    pivot = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivot, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _round_robin(n: int) -> list:
    """Pair schedule covering every (p, q) once, as n-1 rounds of disjoint pairs."""
    players = list(range(n)) + ([-1] if n % 2 else [])
    k = len(players)
    rounds = []
    for _ in range(k - 1):
        pairs = []
        for t in range(k // 2):
            a, b = players[t], players[k - 1 - t]
            if a >= 0 and b >= 0:
                pairs.append((min(a, b), max(a, b)))
        rounds.append(pairs)
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


_SCHEDULES: dict = {}


def _schedule(n: int):
    if n not in _SCHEDULES:
        out = []
        for pairs in _round_robin(n):
            p = np.array([a for a, _ in pairs], dtype=np.int64)
            q = np.array([b for _, b in pairs], dtype=np.int64)
            out.append((p, q))
        _SCHEDULES[n] = out
    return _SCHEDULES[n]


def jacobi_eigh(a, rel_tol: float = JACOBI_REL_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS) -> Spectrum:
    """Cyclic Jacobi diagonalisation of a dense symmetric matrix.

    A sweep visits every off-diagonal pair once.  Pairs are grouped into
    rounds of disjoint pairs (round-robin order); rotations inside a round
    commute, so each round is applied as one orthogonal similarity.
    Sweeps stop once the off-diagonal Frobenius norm is at most
    ``rel_tol * ||a||_F``.
    """
    A = np.array(a, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInputError("matrix must be square")
    n = A.shape[0]
    if not np.allclose(A, A.T, rtol=1e-12, atol=1e-12 * (1.0 + np.abs(A).max(initial=0.0))):
        raise InvalidInputError("matrix must be symmetric")
    A = 0.5 * (A + A.T)
    V = np.eye(n)
    tol = rel_tol * np.linalg.norm(A)
    rounds = _schedule(n) if n > 1 else []
    J = np.eye(n)
    sweeps = 0
    while sweeps < max_sweeps:
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= tol:
            break
        sweeps += 1
        for p, q in rounds:
            apq = A[p, q]
            live = np.abs(apq) > 1e-300
            if not live.any():
                continue
            safe = np.where(live, apq, 1.0)
            theta = (A[q, q] - A[p, p]) / (2.0 * safe)
            big = np.abs(theta) > 1e150
            th = np.where(big, 1.0, theta)
            t = np.where(th >= 0, 1.0, -1.0) / (np.abs(th) + np.sqrt(1.0 + th * th))
            # for huge theta the rotation angle is ~ 1 / (2 theta)
            t = np.where(big, 0.5 / np.where(big, theta, 1.0), t)
            t[~live] = 0.0
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            J[p, p] = c
            J[q, q] = c
            J[p, q] = s
            J[q, p] = -s
            A = J.T @ A @ J
            A[p, q] = 0.0
            A[q, p] = 0.0
            V = V @ J
            J[p, p] = 1.0
            J[q, q] = 1.0
            J[p, q] = 0.0
            J[q, p] = 0.0
    values = np.diag(A).copy()
    order = np.argsort(values, kind="stable")
    return Spectrum(values[order], _fix_signs(V[:, order]), sweeps)


def spectrum(graph: WeightedGraph, x=None) -> Spectrum:
    """Eigen-decomposition of the weighted Laplacian of a selection."""
    return jacobi_eigh(laplacian(graph, x))


def _as_selection_args(sel):
    if isinstance(sel, EdgeSelection):
        return sel.graph, sel
    raise InvalidInputError("expected an EdgeSelection")


def algebraic_connectivity(sel: EdgeSelection) -> float:
    g, x = _as_selection_args(sel)
    if g.n < 2:
        raise InvalidInputError("algebraic connectivity needs at least two vertices")
    return float(spectrum(g, x).values[1])


def fiedler_vector(sel: EdgeSelection) -> np.ndarray:
    g, x = _as_selection_args(sel)
    if g.n < 2:
        raise InvalidInputError("Fiedler vector needs at least two vertices")
    return spectrum(g, x).vectors[:, 1].copy()


def connectivity_tolerance(graph: WeightedGraph) -> float:
    wmax = float(graph.weights.max()) if graph.m else 0.0
    return 1e-6 * (1.0 + wmax)


def worst_case_compliance(sel: EdgeSelection) -> float:
    """Largest displacement energy over unit loads, i.e. 1 / lambda_2."""
    if not is_connected(sel):
        raise DisconnectedError("compliance is unbounded for a disconnected selection")
    lam2 = algebraic_connectivity(sel)
    if lam2 <= connectivity_tolerance(sel.graph):
        raise DisconnectedError("algebraic connectivity is numerically zero")
    return 1.0 / lam2


def tree_laplacians(graph: WeightedGraph, trees: np.ndarray) -> np.ndarray:
    """Stack of Laplacians for an array of edge-index rows (one tree per row)."""
    trees = np.asarray(trees, dtype=np.int64)
    b = trees.shape[0]
    n = graph.n
    i = graph.tails[trees]
    j = graph.heads[trees]
    w = graph.weights[trees]
    base = (np.arange(b) * n)[:, None]
    L = np.zeros((b, n * n))
    rows = np.arange(b)[:, None]
    # a tree never repeats an edge, so plain assignment is safe off the diagonal
    L[rows, i * n + j] = -w
    L[rows, j * n + i] = -w
    deg = np.bincount((base + i).ravel(), w.ravel(), minlength=b * n)
    deg += np.bincount((base + j).ravel(), w.ravel(), minlength=b * n)
    L[:, np.arange(n) * (n + 1)] = deg.reshape(b, n)
    return L.reshape(b, n, n)


def batch_eigenvalues(graph: WeightedGraph, trees: np.ndarray) -> np.ndarray:
    """Ascending Laplacian eigenvalues of many trees at once (LAPACK, batched).

    Used for bulk scoring where a per-tree Jacobi run would dominate runtime.
    """
    if len(trees) == 0:
        return np.zeros((0, graph.n))
    return np.linalg.eigvalsh(tree_laplacians(graph, trees))


def connectivity_exceeds(graph: WeightedGraph, trees: np.ndarray, level: float) -> np.ndarray:
    """Mask of trees with lambda_2 > level, by a batched Cholesky test.

    L - level*I + (level + 1) 11'/n moves the zero eigenvalue to 1 and is
    positive definite exactly when lambda_2 exceeds the level.  Much cheaper
    than eigenvalues when most candidates fail.
    """
    trees = np.asarray(trees, dtype=np.int64)
    if len(trees) == 0:
        return np.zeros(0, dtype=bool)
    n = graph.n
    a = tree_laplacians(graph, trees)
    a += (level + 1.0) / n
    a[:, np.arange(n), np.arange(n)] -= level
    ok = np.ones(len(trees), dtype=bool)
    for k in range(n):
        piv = a[:, k, k]
        ok &= piv > 0
        root = np.sqrt(np.where(ok, piv, 1.0))
        col = np.where(ok[:, None], a[:, k + 1:, k] / root[:, None], 0.0)
        a[:, k + 1:, k + 1:] -= col[:, :, None] * col[:, None, :]
    return ok
