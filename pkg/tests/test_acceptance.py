"""Acceptance criteria 1-10; each test records a PASS/FAIL line for the summary.

Criterion 3 (nine-node fixtures) is slow and runs only with
SPECTRAL_SYNTH_NINE_NODE=1 in the environment.
"""
import os

import pytest

from spectral_synth import bench

LINES = []


def _run(number):
    res = bench.CRITERIA[number]()
    LINES.append(res.line())
    print(res.line())
    for d in res.details:
        print("   ", d)
    assert res.passed, res.summary


def test_criterion_01_fixture_optimality():
    _run(1)


def test_criterion_02_exact_solver_agreement():
    _run(2)


@pytest.mark.skipif(os.environ.get("SPECTRAL_SYNTH_NINE_NODE") != "1",
                    reason="nine-node check is opt-in (SPECTRAL_SYNTH_NINE_NODE=1)")
def test_criterion_03_nine_node_fixtures():
    _run(3)


def test_criterion_04_upper_bound_contract():
    _run(4)


def test_criterion_05_heuristic_quality():
    _run(5)


def test_criterion_06_diameter_synthesis():
    _run(6)


def test_criterion_07_power_synthesis():
    _run(7)


def test_criterion_08_placement_identity():
    _run(8)


def test_criterion_09_engine_soundness():
    _run(9)


def test_criterion_10_compliance_identity():
    _run(10)
