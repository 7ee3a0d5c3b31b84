import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_graph
from spectral_synth.errors import InfeasibleError, InvalidInputError
from spectral_synth.graph import EdgeSelection, WeightedGraph
from spectral_synth.spectral import algebraic_connectivity
from spectral_synth.trees import (all_spanning_trees, brute_force_optimum, diameter_filter,
                                  enumerate_decreasing, enumerate_increasing, max_spanning_tree,
                                  min_spanning_tree, power_filter, spanning_tree_count)


def _subset_trees(g):
    """Spanning trees by checking every (n-1)-subset of edges."""
    out = []
    for combo in itertools.combinations(range(g.m), g.n - 1):
        if EdgeSelection(g, combo).is_spanning_tree():
            out.append(combo)
    return out


@given(st.integers(2, 6), st.floats(0.2, 1.0), st.booleans(), st.integers(0, 2**31 - 1))
def test_kirchhoff_count_matches_enumeration(n, density, connected, seed):
    g = random_graph(np.random.default_rng(seed), n, density, connected)
    trees = [t.indices for t in all_spanning_trees(g)]
    assert len(trees) == len(set(trees)) == spanning_tree_count(g)
    assert sorted(trees) == _subset_trees(g)


def test_cayley_count():
    g = random_graph(np.random.default_rng(0), 6)
    assert spanning_tree_count(g) == 6 ** 4 == sum(1 for _ in all_spanning_trees(g))


@given(st.integers(3, 7), st.integers(0, 2**31 - 1))
def test_ranked_enumeration(n, seed):
    g = random_graph(np.random.default_rng(seed), n)
    everything = sorted((-EdgeSelection(g, t).weight(), t) for t in _subset_trees(g))
    count = min(40, len(everything))
    got = enumerate_decreasing(g, count)
    weights = [t.weight() for t in got]
    assert all(a >= b - 1e-9 for a, b in zip(weights, weights[1:]))
    assert len(set(got)) == count
    assert np.allclose(weights, [-w for w, _ in everything[:count]])
    assert got[0] == max_spanning_tree(g)
    low = enumerate_increasing(g, count)
    assert low[0] == min_spanning_tree(g)
    assert all(a.weight() <= b.weight() + 1e-9 for a, b in zip(low, low[1:]))


def test_three_node_oracle_picks_best_of_three():
    g = WeightedGraph(3, ((0, 1, 1.0), (0, 2, 2.0), (1, 2, 3.0)))
    val, sel = brute_force_optimum(g)
    values = {t: algebraic_connectivity(EdgeSelection(g, t)) for t in itertools.combinations(range(3), 2)}
    best = max(values, key=values.get)
    assert sel.indices == best
    assert abs(val - values[best]) < 1e-12
    assert abs(val - (5 - 7 ** 0.5)) < 1e-12


@given(st.integers(3, 6), st.integers(0, 2**31 - 1))
def test_oracle_against_subset_scan(n, seed):
    g = random_graph(np.random.default_rng(seed), n, 0.7)
    val, sel = brute_force_optimum(g)
    ref = max(algebraic_connectivity(EdgeSelection(g, t)) for t in _subset_trees(g))
    assert abs(val - ref) < 1e-9
    assert sel.is_spanning_tree()


def test_filters(rng):
    g = random_graph(rng, 6)
    val2, sel2 = brute_force_optimum(g, diameter_filter(2))
    from spectral_synth.resources import tree_diameter, tree_power
    assert tree_diameter(sel2) == 2
    free, _ = brute_force_optimum(g)
    assert val2 <= free + 1e-12
    tight = tree_power(sel2)
    valp, selp = brute_force_optimum(g, power_filter(tight))
    assert tree_power(selp) <= tight + 1e-6
    with pytest.raises(InfeasibleError):
        brute_force_optimum(g, power_filter(1e-6))


def test_enumeration_size_limit():
    g = random_graph(np.random.default_rng(1), 10)
    with pytest.raises(InvalidInputError):
        brute_force_optimum(g)
