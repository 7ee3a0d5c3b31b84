import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_graph
from spectral_synth.errors import InvalidInputError
from spectral_synth.formulations import (FormulationConfig, build_relaxed_misdp, edge_capacity_matrix,
                                         eigen_cut_coefficients, enumerated_min_cut, min_cut_violation,
                                         normalise_cut_vector, psd_violation, stoer_wagner)
from spectral_synth.graph import EdgeSelection
from spectral_synth.milp import solve_milp
from spectral_synth.spectral import algebraic_connectivity, fiedler_vector
from spectral_synth.trees import all_spanning_trees, brute_force_optimum

seeds = st.integers(0, 2**31 - 1)


def _cut_value(graph, x, side):
    inside = np.zeros(graph.n, dtype=bool)
    inside[list(side)] = True
    return float(np.asarray(x)[inside[graph.tails] != inside[graph.heads]].sum())


@given(st.integers(2, 10), st.floats(0.1, 1.0), seeds)
def test_stoer_wagner_matches_enumeration(n, density, seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n, density, connected=bool(seed % 3))
    x = rng.random(g.m).round(3)
    ref, side = enumerated_min_cut(g, x)
    val, sw_side = stoer_wagner(n, edge_capacity_matrix(g, x))
    assert abs(val - ref) < 1e-9
    assert abs(_cut_value(g, x, sw_side) - val) < 1e-9
    assert abs(_cut_value(g, x, side) - ref) < 1e-9
    assert 0 < len(sw_side) < n


def test_min_cut_violation_on_disconnected_selection(rng):
    g = random_graph(rng, 6)
    x = np.zeros(g.m)
    x[g.edge_index(0, 1)] = 1.0
    side = min_cut_violation(g, x)
    assert side is not None and _cut_value(g, x, side) < 1.0
    assert min_cut_violation(g, np.ones(g.m)) is None


@given(st.integers(3, 7), seeds)
def test_eigen_rows_are_valid_for_every_tree(n, seed):
    """v.L(T)v >= lambda_2(T) for unit v orthogonal to 1, so no tree is cut off at its own level."""
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n)
    v = normalise_cut_vector(rng.normal(size=n))
    a = eigen_cut_coefficients(g, v)
    for t in itertools.islice(all_spanning_trees(g), 200):
        assert a @ t.x >= algebraic_connectivity(t) - 1e-9


def test_normalise_rejects_constant_vector():
    with pytest.raises(InvalidInputError):
        normalise_cut_vector(np.ones(4))


@given(st.integers(3, 8), seeds)
def test_psd_check(n, seed):
    g = random_graph(np.random.default_rng(seed), n)
    from spectral_synth.trees import max_spanning_tree
    t = max_spanning_tree(g)
    lam = algebraic_connectivity(t)
    assert not psd_violation(g, t, lam * (1 - 1e-9)).violated
    chk = psd_violation(g, t, lam * 1.05 + 0.01)
    assert chk.violated
    # the returned vector certifies the violation through its eigen row
    assert eigen_cut_coefficients(g, chk.vector) @ t.x < lam * 1.05 + 0.01


@pytest.mark.parametrize("mode", ["cutset", "flow"])
@given(st.integers(3, 6), seeds)
def test_relaxation_bounds_the_optimum(mode, n, seed):
    g = random_graph(np.random.default_rng(seed), n)
    best, _ = brute_force_optimum(g)
    trees = list(itertools.islice(all_spanning_trees(g), 15))
    model = build_relaxed_misdp(g, FormulationConfig(vectors=[fiedler_vector(t) for t in trees],
                                                     connectivity=mode))
    sol = solve_milp(model)
    assert sol.status == "optimal"
    sel = model.selection(sol.values)
    assert sel.is_spanning_tree()
    assert sol.objective >= best - 1e-7


def test_budget_below_tree_is_rejected(rng):
    g = random_graph(rng, 5)
    with pytest.raises(InvalidInputError):
        build_relaxed_misdp(g, FormulationConfig(budget=3))
