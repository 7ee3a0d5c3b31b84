"""Command-line front end: ``spectral-synth <command> ...``.

Every command prints one JSON document on stdout (``bench`` prints a table
unless ``--json`` is given).  Exit codes: 0 success, 1 usage, I/O, input
or schema errors, 2 infeasible models, 3 failed acceptance criteria.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import re
import sys
import time
from functools import lru_cache
from importlib import resources

import jsonschema
import numpy as np

from .errors import DisconnectedError, InfeasibleError, InvalidInputError
from .graph import EdgeSelection, WeightedGraph

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE, EXIT_BENCH_FAILED = 0, 1, 2, 3
SIGNIFICANT_DIGITS = 12


class CliError(Exception):
    def __init__(self, prefix: str, message: str, code: int = EXIT_ERROR):
        super().__init__(message)
        self.prefix = prefix
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("usage error", message)


@lru_cache(maxsize=1)
def schema() -> dict:
    return json.loads(resources.files("spectral_synth").joinpath("schema.json").read_text())


def _validate(doc, kind: str, what: str):
    try:
        jsonschema.validate(doc, {"$ref": f"#/$defs/{kind}", "$defs": schema()["$defs"]})
    except jsonschema.ValidationError as exc:
        raise CliError("schema error", f"{what} does not match the '{kind}' schema: {exc.message}")


def _round(obj):
    """Floats to 12 significant digits, non-finite values to null."""
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(f"{x:.{SIGNIFICANT_DIGITS}g}") if math.isfinite(x) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj


def _emit(doc: dict, kind: str, out=None):
    doc = _round(doc)
    _validate(doc, kind, "output")
    text = json.dumps(doc, indent=None, separators=(", ", ": "))
    if out:
        _write(out, text + "\n")
    print(text)


def _write(path: str, text: str):
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError("io error", f"cannot write {path}: {exc.strerror}")


def _read_json(path, what: str):
    try:
        if path in (None, "-"):
            text = sys.stdin.read()
        else:
            with open(path) as fh:
                text = fh.read()
    except OSError as exc:
        raise CliError("io error", f"cannot read {what} {path}: {exc.strerror}")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError("input error", f"{what} is not valid JSON: {exc.msg} (line {exc.lineno})")


def _load_graph(path) -> WeightedGraph:
    data = _read_json(path, "graph")
    _validate(data, "graph", "graph input")
    return WeightedGraph.from_dict(data)


def _load_edges(path, graph: WeightedGraph) -> EdgeSelection:
    data = _read_json(path, "edge list")
    _validate(data, "edges_input", "edge list")
    pairs = data["edges"] if isinstance(data, dict) else data
    return EdgeSelection.from_pairs(graph, pairs)


def _duration(text: str) -> float:
    """Seconds from '180', '180s', '3m' or '1h'."""
    m = re.fullmatch(r"\s*([0-9]*\.?[0-9]+)\s*([smh]?)\s*", text)
    if not m:
        raise argparse.ArgumentTypeError(f"bad duration {text!r}")
    return float(m.group(1)) * {"": 1, "s": 1, "m": 60, "h": 3600}[m.group(2)]


def _positive_float(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not (x > 0 and math.isfinite(x)):
        raise argparse.ArgumentTypeError(f"must be positive and finite: {text!r}")
    return x


def _filter_for(args):
    from .trees import diameter_filter, power_filter

    if getattr(args, "pmax", None) is not None:
        return power_filter(args.pmax), f"power <= {args.pmax}"
    if getattr(args, "diam", None) is not None:
        return diameter_filter(args.diam), f"diameter <= {args.diam}"
    return None, None


def dot_text(sel: EdgeSelection, coords=None) -> str:
    """Undirected DOT for a selection, weights as labels, optional fixed positions."""
    g = sel.graph
    lines = ["graph tree {"]
    for v in range(g.n):
        if coords is not None:
            lines.append(f'  {v} [pos="{coords[v][0]:.6f},{coords[v][1]:.6f}!"];')
        else:
            lines.append(f"  {v};")
    for k in sel.indices:
        i, j, w = g.edges[k]
        lines.append(f'  {i} -- {j} [label="{w:.6g}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---- commands -----------------------------------------------------------------

def cmd_gen(args):
    from .instances import generate_random

    graph = generate_random(args.n, args.seed, star_filter=not args.no_star_filter)
    _emit(graph.to_dict(), "graph", args.out)


def cmd_fixture(args):
    from .instances import load_fixture

    graph, known = load_fixture(args.n, args.idx)
    doc = graph.to_dict()
    doc["known_optimum"] = known
    _emit(doc, "graph", args.out)


def cmd_oracle(args):
    from .trees import brute_force_optimum

    graph = _load_graph(args.graph)
    filt, label = _filter_for(args)
    val, sel = brute_force_optimum(graph, filt)
    doc = {"lambda2": val, "edges": [list(p) for p in sel.pairs]}
    if label:
        doc["constraint"] = label
    _dot(args, sel)
    _emit(doc, "oracle", args.out)


def cmd_bound(args):
    from .bounds import fiedler_pool, upper_bound

    graph = _load_graph(args.graph)
    pool = fiedler_pool(graph, args.trees, args.pool)
    ub = upper_bound(graph, pool, connectivity=args.connectivity)
    _emit({"upper": ub.upper, "incumbent": ub.incumbent, "gap_pct": ub.gap_pct,
           "trees": pool.enumerated, "pool": len(pool), "nodes": ub.nodes,
           "edges": [list(p) for p in ub.selection.pairs]}, "bound", args.out)


def cmd_solve(args):
    from .exact import ea1, ea2, ea3
    from .resources import DiameterSpec, PowerSpec, power_lower_bound, solve_diameter, solve_power

    graph = _load_graph(args.graph)
    if args.diam is not None:
        rep = solve_diameter(graph, DiameterSpec(args.diam), eps=args.eps, seed=args.seed)
    elif args.pmax is not None:
        spec = PowerSpec(args.pmax, args.radius)
        if args.lb:
            rep = power_lower_bound(graph, spec, eps=args.eps, time_budget=args.budget, seed=args.seed,
                                    connectivity=args.connectivity)
        else:
            rep = solve_power(graph, spec, seed=args.seed, connectivity=args.connectivity)
    elif args.algo in ("ea1", "ea1-improved"):
        rep = ea1(graph, improved=args.algo == "ea1-improved", seed=args.seed, enum_count=args.trees,
                  pool_size=args.pool, connectivity=args.connectivity)
    elif args.algo == "ea2":
        rep = ea2(graph, connectivity=args.connectivity)
    else:
        rep = ea3(graph, eps=args.eps, seed=args.seed, connectivity=args.connectivity)
    doc = rep.to_dict()
    if rep.algorithm in ("ea3", "diameter", "power-lower-bound"):
        doc["eps"] = args.eps
    if args.trace:
        _write_trace(args.trace, rep.trace)
    _dot(args, rep.selection)
    _emit(doc, "solve", args.out)


def _write_trace(path, trace):
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "upper", "lower"])
            for t in _round(trace):
                w.writerow([t["iteration"], "" if t["upper"] is None else t["upper"],
                            "" if t["lower"] is None else t["lower"]])
    except OSError as exc:
        raise CliError("io error", f"cannot write {path}: {exc.strerror}")


def cmd_heur(args):
    from .heuristics import improved_k_opt, multi_start, two_opt
    from .resources import PowerSpec, power_feasible_start

    graph = _load_graph(args.graph)
    if not args.improved and args.k != 2:
        raise CliError("usage error", "exhaustive search supports --k 2 only; add --improved for k = 3")
    filt, _ = _filter_for(args)
    method = "improved" if args.improved else "two_opt"
    try:
        res = multi_start(graph, method, starts=args.starts, k=args.k, feasible=filt)
    except InfeasibleError:
        # every star breaks the power budget: start from the best light tree that fits
        start = power_feasible_start(graph, PowerSpec(args.pmax)) if args.pmax is not None else None
        if start is None:
            raise
        res = (improved_k_opt(graph, start, args.k, feasible=filt) if args.improved
               else two_opt(graph, start, filt))
    _dot(args, res.selection)
    _emit({"lambda2": res.lambda2, "edges": [list(p) for p in res.selection.pairs], "moves": res.moves,
           "method": f"{method} k={args.k}", "trace": res.trace}, "heur", args.out)


def cmd_place(args):
    from .resources import optimal_placement, placement_power
    from .spectral import spectrum

    graph = _load_graph(args.graph)
    sel = _load_edges(args.edges, graph)
    coords = optimal_placement(sel, args.radius)
    vals = spectrum(graph, sel).values
    if args.dot:
        _write(args.dot, dot_text(sel, coords))
    _emit({"radius": args.radius, "edges": [list(p) for p in sel.pairs], "coordinates": coords.tolist(),
           "power": placement_power(sel, coords), "lambda2": vals[1], "lambda3": vals[2]},
          "place", args.out)


def cmd_bench(args):
    from . import bench

    numbers = args.criteria or (bench.DEFAULT_CRITERIA + ((3,) if args.nine_node else ()))
    for k in numbers:
        if k not in bench.CRITERIA:
            raise CliError("usage error", f"no criterion {k}")
    echo = None if args.json else (lambda r: print(r.line(), file=sys.stderr, flush=True))
    if args.jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(args.jobs) as ex:
            results = list(ex.map(_run_one, numbers))
    else:
        results = bench.run(numbers, echo)
    passed = all(r.passed for r in results)
    if args.json:
        _emit({"passed": passed, "criteria": [{"number": r.number, "title": r.title, "passed": r.passed,
                                               "summary": r.summary, "details": r.details}
                                              for r in results]}, "bench", args.out)
    else:
        print(bench.format_table(results))
        if args.verbose:
            for r in results:
                print(f"\ncriterion {r.number}:")
                print("\n".join(f"  {d}" for d in r.details))
    if not passed:
        raise CliError("bench failed", "some acceptance criteria failed", EXIT_BENCH_FAILED)


def _run_one(k):
    from . import bench

    return bench.run((k,))[0]


def _dot(args, sel):
    if getattr(args, "dot", None):
        _write(args.dot, dot_text(sel))


# ---- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="spectral-synth", description="Spanning-tree synthesis for maximum algebraic connectivity.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def graph_arg(sp):
        sp.add_argument("--graph", default=None, help="graph JSON file ('-' or omitted: stdin)")

    def out_args(sp, dot=True):
        sp.add_argument("--out", help="also write the JSON document here")
        if dot:
            sp.add_argument("--dot", help="write the chosen tree as DOT")

    def limits(sp):
        grp = sp.add_mutually_exclusive_group()
        grp.add_argument("--pmax", type=_positive_float, help="power budget on lambda_2 + lambda_3")
        grp.add_argument("--diam", type=int, help="even diameter bound")

    sp = sub.add_parser("gen", help="random instance")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--no-star-filter", action="store_true", help="skip the star-connectivity rejection test")
    out_args(sp, dot=False)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("fixture", help="built-in 8- and 9-node instances")
    sp.add_argument("--n", type=int, required=True, choices=(8, 9))
    sp.add_argument("--idx", type=int, required=True)
    out_args(sp, dot=False)
    sp.set_defaults(func=cmd_fixture)

    sp = sub.add_parser("oracle", help="exhaustive optimum (n <= 9)")
    graph_arg(sp)
    limits(sp)
    out_args(sp)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("bound", help="Fiedler-pool upper bound")
    graph_arg(sp)
    sp.add_argument("--trees", type=int, default=15_000, help="heaviest trees to enumerate")
    sp.add_argument("--pool", type=int, default=1_000, help="Fiedler vectors kept")
    sp.add_argument("--connectivity", choices=("cutset", "flow"), default="cutset")
    out_args(sp, dot=False)
    sp.set_defaults(func=cmd_bound)

    sp = sub.add_parser("solve", help="exact solve")
    graph_arg(sp)
    sp.add_argument("--algo", choices=("ea1", "ea1-improved", "ea2", "ea3"), default="ea3")
    sp.add_argument("--eps", type=_positive_float, default=0.01, help="level step for level searches")
    sp.add_argument("--seed", type=int, default=0, help="seed for the random starting vectors")
    sp.add_argument("--trees", type=int, default=15_000)
    sp.add_argument("--pool", type=int, default=1_000)
    sp.add_argument("--connectivity", choices=("cutset", "flow"), default="cutset")
    limits(sp)
    sp.add_argument("--radius", type=_positive_float, default=1.0, help="placement radius for --pmax")
    sp.add_argument("--lb", action="store_true", help="with --pmax: anytime lower-bounding search")
    sp.add_argument("--budget", type=_duration, default=None, help="time budget for --lb, e.g. 180s")
    sp.add_argument("--trace", help="write the bound trace as CSV")
    out_args(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("heur", help="local search from the best stars")
    graph_arg(sp)
    sp.add_argument("--k", type=int, choices=(2, 3), default=2)
    sp.add_argument("--improved", action="store_true", help="spectrally ranked k-exchange")
    sp.add_argument("--starts", type=int, default=5)
    limits(sp)
    out_args(sp)
    sp.set_defaults(func=cmd_heur)

    sp = sub.add_parser("place", help="minimum-power placement of a tree")
    graph_arg(sp)
    sp.add_argument("--edges", required=True, help="JSON edge list, or any document with an 'edges' key")
    sp.add_argument("--radius", type=_positive_float, default=1.0)
    out_args(sp)
    sp.set_defaults(func=cmd_place)

    sp = sub.add_parser("bench", help="run the acceptance suite")
    sp.add_argument("--criteria", type=int, nargs="+", help="criterion numbers (default: all but 3)")
    sp.add_argument("--nine-node", action="store_true", help="include the long 9-node check")
    sp.add_argument("--jobs", type=int, default=1, help="criteria run in parallel processes")
    sp.add_argument("--json", action="store_true", help="JSON instead of a table")
    sp.add_argument("--verbose", action="store_true", help="per-instance details")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "diam", None) is not None and (args.diam < 2 or args.diam % 2):
            raise CliError("input error", "--diam must be an even integer >= 2")
        if args.command == "solve" and (args.lb or args.budget is not None) and args.pmax is None:
            raise CliError("usage error", "--lb and --budget need --pmax")
        args.func(args)
        return EXIT_OK
    except CliError as exc:
        print(f"{exc.prefix}: {exc}", file=sys.stderr)
        return exc.code
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (InvalidInputError, DisconnectedError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
