import json
import subprocess
import sys

import pytest

from spectral_synth.cli import _round, dot_text, main, schema
from spectral_synth.instances import load_fixture
from spectral_synth.trees import max_spanning_tree


def run(args, stdin=None):
    proc = subprocess.run([sys.executable, "-m", "spectral_synth.cli", *args], input=stdin,
                          capture_output=True, text=True, timeout=600)
    return proc.returncode, proc.stdout, proc.stderr


@pytest.fixture(scope="module")
def fixture_json():
    code, out, _ = run(["fixture", "--n", "8", "--idx", "1"])
    assert code == 0
    return out


@pytest.fixture(scope="module")
def small_graph(tmp_path_factory):
    path = tmp_path_factory.mktemp("g") / "g.json"
    code, out, _ = run(["gen", "--n", "6", "--seed", "5", "--out", str(path)])
    assert code == 0 and json.loads(out) == json.loads(path.read_text())
    return path


def test_fixture_to_ea3_pipeline(fixture_json):
    code, out, _ = run(["solve", "--algo", "ea3", "--eps", "0.01"], stdin=fixture_json)
    assert code == 0
    doc = json.loads(out)
    assert abs(doc["lambda2"] - 22.8042) <= 0.01 + 1e-3
    assert doc["termination"] == "optimal"


def test_oracle_three_nodes():
    graph = json.dumps({"n": 3, "edges": [[0, 1, 1.0], [0, 2, 2.0], [1, 2, 3.0]]})
    code, out, _ = run(["oracle"], stdin=graph)
    assert code == 0
    assert json.loads(out) == {"lambda2": round(5 - 7 ** 0.5, 11), "edges": [[0, 2], [1, 2]]}


@pytest.mark.parametrize("args", [
    ["gen", "--n", "9", "--seed", "3"],
    ["heur", "--k", "3", "--improved"],
    ["solve", "--algo", "ea1"],
    ["solve", "--diam", "4", "--eps", "0.05"],
])
def test_byte_identical_output(args, small_graph):
    if args[0] != "gen":
        args = args + ["--graph", str(small_graph)]
    first, second = run(args), run(args)
    assert first[0] == 0 and first[1] == second[1]


def test_every_command_validates(small_graph, tmp_path):
    g = str(small_graph)
    cases = {
        "oracle": ["oracle", "--graph", g, "--diam", "4"],
        "bound": ["bound", "--graph", g, "--trees", "200", "--pool", "20"],
        "solve": ["solve", "--graph", g, "--pmax", "30", "--lb", "--budget", "20s"],
        "heur": ["heur", "--graph", g, "--k", "2"],
    }
    for kind, args in cases.items():
        code, out, err = run(args)
        assert code == 0, err
        assert main([*args, "--out", str(tmp_path / f"{kind}.json")]) == 0


def test_trace_and_dot_files(small_graph, tmp_path):
    trace, dot = tmp_path / "t.csv", tmp_path / "t.dot"
    code, out, _ = run(["solve", "--graph", str(small_graph), "--algo", "ea2", "--trace", str(trace),
                        "--dot", str(dot)])
    assert code == 0
    rows = trace.read_text().splitlines()
    assert rows[0] == "iteration,upper,lower" and len(rows) >= 2
    text = dot.read_text()
    assert text.startswith("graph tree {") and text.count(" -- ") == 5 and "label=" in text


def test_place_command(small_graph, tmp_path):
    code, out, _ = run(["oracle", "--graph", str(small_graph)])
    edges = tmp_path / "e.json"
    edges.write_text(out)
    dot = tmp_path / "p.dot"
    code, out, _ = run(["place", "--graph", str(small_graph), "--edges", str(edges), "--radius", "2",
                        "--dot", str(dot)])
    assert code == 0
    doc = json.loads(out)
    assert abs(doc["power"] - 4 * (doc["lambda2"] + doc["lambda3"])) < 1e-8 * doc["power"]
    assert dot.read_text().count('pos="') == 6


@pytest.mark.parametrize("args,stdin,code,prefix", [
    (["solve", "--bogus"], None, 1, "usage error:"),
    (["frobnicate"], None, 1, "usage error:"),
    (["oracle", "--graph", "/nonexistent/g.json"], None, 1, "io error:"),
    (["oracle"], "{not json", 1, "input error:"),
    (["oracle"], '{"n": 3, "edges": [[0, 1]]}', 1, "schema error:"),
    (["oracle"], '{"n": 3, "edges": [[0, 1, 1.0]]}', 2, "infeasible:"),
    (["solve", "--diam", "3"], '{"n": 3, "edges": [[0, 1, 1.0], [1, 2, 1.0]]}', 1, "input error:"),
    (["solve", "--pmax", "0.01"], '{"n": 4, "edges": [[0, 1, 1.0], [1, 2, 1.0], [2, 3, 1.0]]}', 2,
     "infeasible:"),
    (["heur", "--k", "3"], '{"n": 3, "edges": [[0, 1, 1.0], [1, 2, 1.0]]}', 1, "usage error:"),
])
def test_error_exits(args, stdin, code, prefix):
    got, out, err = run(args, stdin)
    assert got == code
    assert err.startswith(prefix)
    assert out == ""


def test_rounding_and_null():
    assert _round({"a": [1.0 / 3.0, float("inf")], "b": float("nan")}) == {"a": [0.333333333333, None], "b": None}


def test_dot_text_positions():
    g, _ = load_fixture(8, 2)
    t = max_spanning_tree(g)
    text = dot_text(t, [[k, -k, 0] for k in range(8)])
    assert 'pos="3.000000,-3.000000!"' in text
    assert text.count("--") == 7


def test_schema_is_shipped():
    assert {"graph", "solve", "heur", "oracle", "bound", "place", "bench"} <= set(schema()["$defs"])
