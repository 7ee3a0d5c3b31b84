import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_graph
from spectral_synth.errors import InfeasibleError, InvalidInputError
from spectral_synth.graph import EdgeSelection, WeightedGraph, laplacian
from spectral_synth.instances import generate_random
from spectral_synth.resources import (DiameterSpec, PowerSpec, min_power, optimal_placement,
                                      placement_power, power_lower_bound, solve_diameter, solve_power,
                                      tree_diameter, tree_power)
from spectral_synth.spectral import algebraic_connectivity
from spectral_synth.trees import (all_spanning_trees, brute_force_optimum, diameter_filter, power_filter,
                                  tree_diameters)

seeds = st.integers(0, 2**31 - 1)


def test_diameter_spec_validation():
    for bad in (3, 1, 0, 2.0, True):
        with pytest.raises(InvalidInputError):
            DiameterSpec(bad)
    assert DiameterSpec(40).effective(6) == 10
    assert DiameterSpec(4).effective(6) == 4


@given(st.integers(2, 9), seeds)
def test_bfs_diameter_matches_reachability_powers(n, seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n)
    keys = rng.random(g.m)
    from spectral_synth.bench import _kruskal_by
    sel = EdgeSelection(g, _kruskal_by(g, keys))
    ends = np.array([[list(p) for p in sel.pairs]])
    assert tree_diameter(sel) == int(tree_diameters(n, ends.reshape(1, n - 1, 2))[0])


@pytest.mark.parametrize("seed", [21, 22, 23])
@pytest.mark.parametrize("D", [2, 4])
def test_diameter_solver_matches_filtered_oracle(seed, D):
    g = generate_random(5 + seed % 2, seed)
    oracle, _ = brute_force_optimum(g, diameter_filter(D))
    rep = solve_diameter(g, DiameterSpec(D), eps=1e-4)
    assert tree_diameter(rep.selection) <= D
    assert oracle - 1e-4 - 1e-6 <= rep.optimum <= oracle + 1e-9
    assert rep.extra["diameter"] == tree_diameter(rep.selection)


def test_elimination_row_removes_exactly_one_tree():
    g = generate_random(5, 4)
    trees = list(all_spanning_trees(g))
    X = np.array([t.x for t in trees])
    for k, t in enumerate(trees):
        # sum over the edges of t of x_e <= n - 2
        lhs = X[:, list(t.indices)].sum(axis=1)
        violated = np.flatnonzero(lhs > g.n - 2)
        assert violated.tolist() == [k]


def test_k3_power():
    g = WeightedGraph(3, ((0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)))
    sel = EdgeSelection(g, range(3))
    assert abs(tree_power(sel) - 6.0) < 1e-12
    assert abs(min_power(sel) - 6.0) < 1e-12
    assert abs(min_power(sel, 2.0) - 24.0) < 1e-12


def _random_feasible_placement(rng, n, R):
    q, _ = np.linalg.qr(np.column_stack([np.ones(n), rng.normal(size=(n, 2))]))
    return np.column_stack([R * q[:, 1], R * q[:, 2], np.zeros(n)])


@given(st.integers(3, 9), st.sampled_from([0.5, 1.0, 3.0]), seeds)
def test_optimal_placement(n, R, seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n)
    from spectral_synth.trees import max_spanning_tree
    sel = max_spanning_tree(g)
    xy = optimal_placement(sel, R)
    a, b = xy[:, 0], xy[:, 1]
    ev = np.linalg.eigvalsh(laplacian(g, sel.x))
    best = placement_power(sel, xy)
    assert abs(best - R * R * (ev[1] + ev[2])) <= 1e-8 * max(1.0, best)
    assert abs(a.sum()) < 1e-8 and abs(b.sum()) < 1e-8 and abs(a @ b) < 1e-8
    assert abs(a @ a - R * R) < 1e-8 and abs(b @ b - R * R) < 1e-8
    for _ in range(200):
        assert placement_power(sel, _random_feasible_placement(rng, n, R)) >= best - 1e-8


@pytest.mark.parametrize("seed", [31, 32, 33])
def test_power_solver_matches_filtered_oracle(seed):
    g = generate_random(5 + seed % 2, seed)
    powers = sorted(tree_power(t) for t in all_spanning_trees(g))
    pmax = powers[len(powers) // 2]
    oracle, _ = brute_force_optimum(g, power_filter(pmax))
    rep = solve_power(g, PowerSpec(pmax))
    assert abs(rep.optimum - oracle) <= 1e-6
    assert tree_power(rep.selection) <= pmax + 1e-6
    assert rep.optimum <= pmax / 2 + 1e-6


def test_power_optimum_grows_with_budget():
    g = generate_random(5, 40)
    powers = sorted(tree_power(t) for t in all_spanning_trees(g))
    values = [brute_force_optimum(g, power_filter(p))[0] for p in powers[::10]]
    assert all(b >= a for a, b in zip(values, values[1:]))
    solved = [solve_power(g, PowerSpec(p)).optimum for p in powers[::40]]
    assert all(b >= a - 1e-9 for a, b in zip(solved, solved[1:]))


def test_power_infeasible():
    g = generate_random(5, 41)
    floor = min(tree_power(t) for t in all_spanning_trees(g))
    with pytest.raises(InfeasibleError):
        solve_power(g, PowerSpec(floor * 0.9))
    with pytest.raises(InfeasibleError):
        power_lower_bound(g, PowerSpec(floor * 0.9))


def test_power_lower_bound_anytime():
    g = generate_random(6, 42)
    powers = sorted(tree_power(t) for t in all_spanning_trees(g))
    spec = PowerSpec(powers[len(powers) // 2])
    quick = power_lower_bound(g, spec, time_budget=0.0)
    assert quick.termination == "budget"
    assert tree_power(quick.selection) <= spec.P_max + 1e-6
    half = spec.P_max / 2
    assert abs(quick.extra["gap_pct"] - (half - quick.optimum) / half * 100) < 1e-9
    full = power_lower_bound(g, spec, eps=1e-4)
    lowers = [t["lower"] for t in full.trace]
    assert full.proven and all(b >= a for a, b in zip(lowers, lowers[1:]))
    assert full.optimum >= quick.optimum
    assert abs(full.optimum - solve_power(g, spec).optimum) <= 1e-4 + 1e-6
