import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_graph
from spectral_synth.errors import InfeasibleError, InvalidInputError
from spectral_synth.graph import EdgeSelection
from spectral_synth.heuristics import (_component_labels, _screen, improved_k_opt, multi_start,
                                       reconnections, star_initials, two_opt)
from spectral_synth.instances import star
from spectral_synth.spectral import algebraic_connectivity, batch_eigenvalues
from spectral_synth.trees import all_spanning_trees, diameter_filter, max_spanning_tree

seeds = st.integers(0, 2**31 - 1)


def _is_two_exchange_optimal(g, sel, feasible=None):
    lam = algebraic_connectivity(sel)
    here = set(sel.indices)
    for t in all_spanning_trees(g):
        if len(set(t.indices) - here) <= 2:
            row = np.array([t.indices])
            ev = batch_eigenvalues(g, row)
            if feasible is not None and not feasible(g, row, ev)[0]:
                continue
            if ev[0, 1] > lam + 1e-9 * (1 + lam):
                return False
    return True


@given(st.integers(4, 6), seeds)
def test_two_opt_stops_at_a_two_exchange_optimum(n, seed):
    g = random_graph(np.random.default_rng(seed), n)
    res = two_opt(g, star(g, 0))
    assert res.selection.is_spanning_tree()
    assert _is_two_exchange_optimal(g, res.selection)


@given(st.integers(4, 6), seeds)
def test_uncapped_improved_search_equals_exhaustive_fixed_point(n, seed):
    g = random_graph(np.random.default_rng(seed), n)
    res = improved_k_opt(g, star(g, 1), 2, del_factor=1.0, add_cap=math.inf)
    assert _is_two_exchange_optimal(g, res.selection)


@given(st.integers(4, 7), st.integers(2, 3), seeds)
def test_reconnections_are_exactly_the_tree_completions(n, k, seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n, 0.8)
    tree = np.array(max_spanning_tree(g).indices)
    k = min(k, n - 1)
    keep = np.delete(tree, rng.choice(n - 1, k, replace=False))
    labels, ncomp = _component_labels(n, zip(g.tails[keep], g.heads[keep]))
    scores = rng.random(g.m)
    rows, totals = reconnections(g, labels, ncomp, scores)
    got = {tuple(sorted(r)) for r in rows.tolist()}
    assert len(got) == len(rows)
    want = set()
    outside = [e for e in range(g.m) if e not in set(keep.tolist())]
    for combo in itertools.combinations(outside, k):
        if EdgeSelection(g, list(keep) + list(combo)).is_spanning_tree():
            want.add(combo)
    assert got == want
    assert np.allclose(totals, scores[rows].sum(axis=1))
    assert all(a >= b for a, b in zip(totals, totals[1:]))
    capped, ctot = reconnections(g, labels, ncomp, scores, cap=5)
    assert np.allclose(ctot, totals[:len(ctot)])


@given(st.integers(5, 12), seeds)
def test_inertia_screen_matches_eigenvalues(n, seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n)
    tree = np.array(max_spanning_tree(g).indices)
    k = 2 + int(rng.integers(0, 2))
    keep = np.delete(tree, rng.choice(n - 1, k, replace=False))
    labels, ncomp = _component_labels(n, zip(g.tails[keep], g.heads[keep]))
    added, _ = reconnections(g, labels, ncomp, np.zeros(g.m))
    rows = np.sort(np.concatenate([np.repeat(keep[None], len(added), 0), added], 1), 1)
    lam = batch_eigenvalues(g, rows)[:, 1]
    level = float(np.median(lam)) + 1e-7
    assert np.array_equal(_screen(g, keep, added, rows, level), lam > level)


@given(st.integers(6, 14), seeds)
def test_moves_never_lower_connectivity(n, seed):
    g = random_graph(np.random.default_rng(seed), n)
    init = star_initials(g, 1)[0]
    for res in (two_opt(g, init), improved_k_opt(g, init, 2), improved_k_opt(g, init, 3)):
        assert res.selection.is_spanning_tree()
        assert all(b > a for a, b in zip(res.trace, res.trace[1:]))
        assert abs(res.lambda2 - algebraic_connectivity(res.selection)) < 1e-9 * (1 + res.lambda2)
        assert res.moves == len(res.trace) - 1


def test_feasibility_predicate_is_respected(rng):
    g = random_graph(rng, 9)
    keep = diameter_filter(3)
    for res in (two_opt(g, star(g, 0), keep), improved_k_opt(g, star(g, 0), 3, feasible=keep)):
        row = np.array([res.selection.indices])
        assert keep(g, row, batch_eigenvalues(g, row))[0]


def test_star_initials_order(rng):
    g = random_graph(rng, 7)
    deg = g.weighted_degrees()
    centres = [max(range(g.n), key=lambda v: sum(1 for p in s.pairs if v in p)) for s in star_initials(g, 3)]
    assert list(deg[centres]) == sorted(deg, reverse=True)[:3]


def test_bad_arguments(rng):
    g = random_graph(rng, 6)
    with pytest.raises(InvalidInputError):
        improved_k_opt(g, star(g, 0), k=4)
    with pytest.raises(InvalidInputError):
        improved_k_opt(g, star(g, 0), del_factor=0.0)
    with pytest.raises(InfeasibleError):
        two_opt(g, EdgeSelection(g, [0, 1]))
    with pytest.raises(InfeasibleError):
        two_opt(g, star(g, 0), feasible=lambda graph, rows, ev: np.zeros(len(rows), dtype=bool))
    with pytest.raises(InfeasibleError):
        multi_start(g, feasible=lambda graph, rows, ev: np.zeros(len(rows), dtype=bool))
