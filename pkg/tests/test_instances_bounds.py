import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_graph
from spectral_synth.bounds import fiedler_pool, upper_bound
from spectral_synth.errors import InvalidInputError
from spectral_synth.instances import (generate_random, load_fixture, magic_square, passes_star_filter,
                                      star_connectivities)
from spectral_synth.spectral import algebraic_connectivity
from spectral_synth.trees import brute_force_optimum, max_spanning_tree


@pytest.mark.parametrize("n", range(3, 13))
def test_magic_squares(n):
    m = magic_square(n)
    target = n * (n * n + 1) // 2
    assert sorted(m.ravel().tolist()) == list(range(1, n * n + 1))
    assert (m.sum(axis=0) == target).all() and (m.sum(axis=1) == target).all()
    assert np.trace(m) == target and np.trace(m[::-1]) == target


def test_random_instances_are_deterministic():
    a, b = generate_random(7, 99), generate_random(7, 99)
    assert a == b
    assert a.is_complete()


@given(st.integers(4, 9), st.integers(0, 10_000))
def test_star_filter_holds(n, seed):
    g = generate_random(n, seed)
    assert passes_star_filter(g)
    assert algebraic_connectivity(max_spanning_tree(g)) > np.nanmax(star_connectivities(g))


def test_star_filter_can_be_skipped():
    assert generate_random(3, 0).n == 3
    g = generate_random(20, 1, star_filter=False)
    assert g.n == 20 and g.m == 190


@pytest.mark.parametrize("idx", [1, 5, 10])
def test_fixtures(idx):
    g, known = load_fixture(8, idx)
    assert g.n == 8 and g.m == 28
    assert known > 0
    with pytest.raises(InvalidInputError):
        load_fixture(8, 11)
    with pytest.raises(InvalidInputError):
        load_fixture(7, 1)


@given(st.integers(5, 7), st.integers(0, 2**31 - 1))
def test_pool_upper_bound_dominates_optimum(n, seed):
    g = random_graph(np.random.default_rng(seed), n)
    best, _ = brute_force_optimum(g)
    pool = fiedler_pool(g, 60, 20)
    assert len(pool) == 20
    assert all(a >= b for a, b in zip(pool.connectivities, pool.connectivities[1:]))
    assert pool.incumbent_value <= best + 1e-9
    prev = np.inf
    for k in (1, 5, 20):
        ub = upper_bound(g, pool.vectors[:k], incumbent=pool.incumbent_value)
        assert ub.upper >= best - 1e-7
        assert ub.upper <= prev + 1e-7
        prev = ub.upper


def test_pool_arguments(rng):
    g = random_graph(rng, 5)
    with pytest.raises(InvalidInputError):
        fiedler_pool(g, 5, 10)
    with pytest.raises(InvalidInputError):
        upper_bound(g, [])
