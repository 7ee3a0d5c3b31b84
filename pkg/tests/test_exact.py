import numpy as np
import pytest

from spectral_synth.bench import trace_problems
from spectral_synth.errors import InvalidInputError
from spectral_synth.exact import ea1, ea2, ea3, random_tree_vectors
from spectral_synth.formulations import eigen_cut_coefficients
from spectral_synth.graph import WeightedGraph
from spectral_synth.instances import generate_random
from spectral_synth.spectral import algebraic_connectivity
from spectral_synth.trees import brute_force_optimum

CASES = [(5, 11), (5, 12), (6, 13), (6, 14), (7, 15)]


@pytest.fixture(scope="module", params=CASES, ids=lambda c: f"n{c[0]}s{c[1]}")
def case(request):
    n, seed = request.param
    g = generate_random(n, seed, star_filter=False)
    val, sel = brute_force_optimum(g)
    return g, val, sel


def _check(rep, oracle, tol):
    lam = algebraic_connectivity(rep.selection)
    assert rep.proven
    assert rep.selection.is_spanning_tree()
    assert oracle - tol <= lam <= oracle + 1e-9
    assert abs(rep.optimum - lam) < 1e-9
    assert trace_problems(rep.trace, rep.optimum) == []


@pytest.mark.parametrize("improved", [False, True])
@pytest.mark.parametrize("strategy", ["branch-and-cut", "restart"])
def test_ea1(case, improved, strategy):
    g, val, best = case
    rep = ea1(g, improved=improved, strategy=strategy, enum_count=200, pool_size=50)
    _check(rep, val, 1e-6)
    # every eigen row is valid for every tree, the optimum included
    for rec in rep.cut_log:
        assert eigen_cut_coefficients(g, rec.vector) @ best.x >= val - 1e-7


def test_ea1_flow_connectivity(case):
    g, val, _ = case
    _check(ea1(g, connectivity="flow"), val, 1e-6)


def test_ea2(case):
    g, val, _ = case
    rep = ea2(g)
    _check(rep, val, 1e-6)
    uppers = [t["upper"] for t in rep.trace]
    assert uppers[-1] - rep.optimum <= 1e-6


@pytest.mark.parametrize("eps", [0.01, 1e-4])
def test_ea3(case, eps):
    g, val, _ = case
    rep = ea3(g, eps=eps)
    _check(rep, val, eps + 1e-6)
    lowers = [t["lower"] for t in rep.trace]
    # each new level clears the previous incumbent by at least eps
    assert all(b >= a + eps - 1e-6 for a, b in zip(lowers[:-1], lowers[1:-1]))


def test_random_tree_vectors_are_seeded():
    g = generate_random(6, 3)
    v1, t1 = random_tree_vectors(g, 5, seed=4)
    v2, t2 = random_tree_vectors(g, 5, seed=4)
    assert all(np.array_equal(a, b) for a, b in zip(v1, v2)) and t1 == t2
    assert all(abs(np.linalg.norm(v) - 1) < 1e-9 and abs(v.sum()) < 1e-9 for v in v1)


def test_input_validation():
    g = generate_random(5, 1)
    with pytest.raises(InvalidInputError):
        ea1(g, strategy="bogus")
    with pytest.raises(InvalidInputError):
        ea3(g, eps=0.0)
    with pytest.raises(Exception):
        ea1(WeightedGraph(4, ((0, 1, 1.0), (2, 3, 1.0))))
