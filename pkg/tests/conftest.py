import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from spectral_synth.graph import WeightedGraph

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_graph(rng, n, density=1.0, connected=True, lo=0.5, hi=10.0):
    pairs = {(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < density}
    if connected:
        perm = rng.permutation(n)
        for k in range(1, n):
            a, b = sorted((int(perm[k]), int(perm[rng.integers(0, k)])))
            pairs.add((a, b))
    return WeightedGraph(n, tuple((i, j, float(rng.uniform(lo, hi))) for i, j in sorted(pairs)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def k3():
    return WeightedGraph(3, ((0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import LINES
    except ImportError:
        return
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
        seen = {int(line.split("criterion ")[1].split(":")[0]) for line in LINES}
        for k in sorted(set(range(1, 11)) - seen):
            terminalreporter.write_line(f"[NOT RUN] criterion {k} (skipped or deselected)")
