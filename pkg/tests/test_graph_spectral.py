import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_graph
from spectral_synth.errors import DisconnectedError, InvalidInputError
from spectral_synth.graph import EdgeSelection, WeightedGraph, components, is_connected, laplacian
from spectral_synth.spectral import (algebraic_connectivity, batch_eigenvalues, connectivity_exceeds,
                                     fiedler_vector, jacobi_eigh, spectrum, worst_case_compliance)

graph_params = st.tuples(st.integers(2, 12), st.floats(0.0, 1.0), st.integers(0, 2**31 - 1))


def _graph(params, connected=True):
    n, density, seed = params
    return random_graph(np.random.default_rng(seed), n, density, connected)


def test_rejects_bad_graphs():
    with pytest.raises(InvalidInputError):
        WeightedGraph(3, ((0, 0, 1.0),))
    with pytest.raises(InvalidInputError):
        WeightedGraph(3, ((0, 1, -2.0),))
    with pytest.raises(InvalidInputError):
        WeightedGraph(3, ((0, 1, 1.0), (1, 0, 2.0)))
    with pytest.raises(InvalidInputError):
        WeightedGraph(0, ())


def test_json_round_trip(rng):
    g = random_graph(rng, 7)
    assert WeightedGraph.from_json(g.to_json()) == g


def test_k3_spectrum(k3):
    vals = spectrum(k3).values
    assert np.allclose(vals, [0.0, 3.0, 3.0])


@given(graph_params)
def test_laplacian_structure(params):
    g = _graph(params, connected=False)
    L = laplacian(g)
    assert np.allclose(L, L.T)
    assert np.allclose(L.sum(axis=1), 0.0)
    assert np.linalg.eigvalsh(L).min() > -1e-9


@given(graph_params)
def test_lambda2_positive_iff_connected(params):
    g = _graph(params, connected=False)
    sel = EdgeSelection(g, range(g.m))
    lam2 = spectrum(g).values[1]
    if is_connected(sel):
        assert lam2 > 1e-9
    else:
        assert abs(lam2) < 1e-9
    assert len(components(g.n, [(i, j) for i, j, _ in g.edges])) == 1 or not is_connected(sel)


@given(graph_params)
def test_jacobi_matches_lapack(params):
    g = _graph(params, connected=False)
    L = laplacian(g)
    spec = jacobi_eigh(L)
    ref = np.linalg.eigvalsh(L)
    scale = max(1.0, np.linalg.norm(L))
    assert np.allclose(spec.values, ref, atol=1e-10 * scale)
    V = spec.vectors
    assert np.linalg.norm(L @ V - V * spec.values) <= 1e-10 * scale
    assert np.linalg.norm(V.T @ V - np.eye(g.n)) <= 1e-10


@given(graph_params)
def test_fiedler_vector_is_unit_and_centred(params):
    g = _graph(params)
    sel = EdgeSelection(g, range(g.m))
    v = fiedler_vector(sel)
    assert abs(np.linalg.norm(v) - 1.0) < 1e-10
    assert abs(v.sum()) < 1e-9
    L = laplacian(g)
    assert np.allclose(L @ v, algebraic_connectivity(sel) * v, atol=1e-8 * max(1.0, np.linalg.norm(L)))


@given(graph_params)
def test_compliance_is_pseudoinverse_norm(params):
    g = _graph(params)
    sel = EdgeSelection(g, range(g.m))
    oracle = np.linalg.norm(np.linalg.pinv(laplacian(g)), 2)
    assert abs(worst_case_compliance(sel) - oracle) <= 1e-8 * max(1.0, oracle)


def test_compliance_of_disconnected_selection_raises(rng):
    g = random_graph(rng, 5)
    with pytest.raises(DisconnectedError):
        worst_case_compliance(EdgeSelection(g, [0]))


@given(st.integers(3, 10), st.integers(0, 2**31 - 1))
def test_batched_eigenvalues_and_screen(n, seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n)
    from spectral_synth.trees import enumerate_decreasing
    rows = np.array([t.indices for t in enumerate_decreasing(g, 30)])
    ev = batch_eigenvalues(g, rows)
    for r, row in enumerate(rows[:5]):
        assert np.allclose(ev[r], np.linalg.eigvalsh(laplacian(g, EdgeSelection(g, row).x)))
    level = float(np.median(ev[:, 1])) + 1e-7
    assert np.array_equal(connectivity_exceeds(g, rows, level), ev[:, 1] > level)
