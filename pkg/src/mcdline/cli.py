"""Command-line front end: gen, run, check, bench, report."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench
from .generators import FAMILIES, GenSpec, GenSpecError, generate, generate_points
from .grid import Instance, InvalidInstance
from .offline import (
    InstanceTooLarge,
    check_solution,
    exact_opt,
    load_solution,
    run_triangle,
    save_solution,
    sum_radii,
)
from .online_mcd import ASSERT_LEVELS, InvariantViolation, bound_rhs, run_lineon, safe_ratio
from .srsa import Segment, check_continuous, load_points, run_lineonp, run_onrsa, save_points

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_PARSE = 2
EXIT_GUARD = 3
EXIT_ASSERT = 4

ALGORITHMS = ("triangle", "lineon", "lineonp", "onrsa", "exact")


class ParseError(Exception):
    pass


def parse_sizes(text: str) -> list[int]:
    """Comma list of sizes; ``2^a..2^b`` expands to every power of two between."""
    out: list[int] = []
    for tok in filter(None, (t.strip() for t in text.split(","))):
        try:
            if ".." in tok:
                a, b = tok.split("..")
                if not (a.startswith("2^") and b.startswith("2^")):
                    raise ValueError("ranges must be written 2^a..2^b")
                out.extend(1 << k for k in range(int(a[2:]), int(b[2:]) + 1))
            elif tok.startswith("2^"):
                out.append(1 << int(tok[2:]))
            else:
                out.append(int(tok))
        except ValueError as exc:
            raise ParseError(f"bad size {tok!r}: {exc}") from exc
    return out


def parse_seeds(text: str) -> list[int]:
    """``a:b`` is range(a, b); otherwise a comma list."""
    try:
        if ":" in text:
            a, b = text.split(":")
            return list(range(int(a), int(b)))
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise ParseError(f"bad seeds {text!r}") from exc


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _load_instance(path: str) -> Instance:
    try:
        return Instance.load(path)
    except (OSError, json.JSONDecodeError, InvalidInstance) as exc:
        raise ParseError(f"{path}: {exc}") from exc


def cmd_gen(args) -> int:
    try:
        spec = GenSpec(
            args.family, args.n, args.N, args.t_max, seed=args.seed, origin=args.origin,
            clusters=args.clusters, cluster_width=args.width, alpha=args.alpha,
            depth=args.depth, scale=args.scale,
        )
    except GenSpecError as exc:
        raise ParseError(str(exc)) from exc
    if args.points:
        pts = generate_points(spec)
        if args.out in (None, "-"):
            sys.stdout.write("".join(json.dumps(p.to_json()) + "\n" for p in pts))
        else:
            save_points(pts, args.out)
    else:
        _write(args.out, json.dumps(generate(spec).to_json()) + "\n")
    return EXIT_OK


def cmd_run(args) -> int:
    if args.algorithm == "onrsa":
        try:
            pts = load_points(args.input)
        except (OSError, ValueError) as exc:
            raise ParseError(f"{args.input}: {exc}") from exc
        res = run_onrsa(pts, args.assert_level)
        if args.solution:
            Path(args.solution).write_text(json.dumps([s.to_json() for s in res.segments]) + "\n")
        report = {"algorithm": "onrsa", "points": len(pts), "cost": res.cost,
                  "feasible": res.feasible, "phases": len(res.guess.phases)}
        _write(args.report, json.dumps(report, sort_keys=True) + "\n")
        return EXIT_OK if res.feasible else EXIT_INFEASIBLE

    inst = _load_instance(args.input)
    extra: dict = {}
    if args.algorithm == "triangle":
        tr = run_triangle(inst)
        edges = tr.edges
        extra["sum_radii"] = sum_radii(tr)
    elif args.algorithm == "lineon":
        state, _ = run_lineon(inst, args.delta, args.assert_level)
        edges = state.edges
        tr = state.triangle_sim
        extra.update(
            delta=state.delta, padded_n=state.padded_n, commits=len(state.commits),
            cost_triangle=tr.cost, sum_radii=sum_radii(tr),
            ratio_vs_triangle=safe_ratio(state.cost, tr.cost),
            ratio_vs_sum_radii=safe_ratio(state.cost, sum_radii(tr)),
            bound_rhs=bound_rhs(state.padded_n),
            bound_satisfied=state.cost <= bound_rhs(state.padded_n) * tr.cost,
        )
    elif args.algorithm == "lineonp":
        res = run_lineonp(inst, args.assert_level)
        edges = res.report.edges
        extra.update(chosen=res.chosen, cost_onrsa_route=res.cost_onrsa_route,
                     cost_lineon=res.cost_lineon, repair_edges=res.repair_edges)
    else:
        edges = exact_opt(inst).edges
    rep = check_solution(inst, edges, witnesses=False)
    if args.solution:
        save_solution(edges, args.solution)
    if args.format == "svg":
        _write(args.report, bench.svg_solutions(inst, {args.algorithm: edges}))
    else:
        report = {"algorithm": args.algorithm, **rep.to_json(), **extra}
        report.pop("witnesses")
        _write(args.report, json.dumps(report, sort_keys=True) + "\n")
    return EXIT_OK if rep.feasible else EXIT_INFEASIBLE


def cmd_check(args) -> int:
    if args.points:
        try:
            pts = load_points(args.input)
            segs = [Segment.from_json(d) for d in json.loads(Path(args.solution).read_text())]
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise ParseError(str(exc)) from exc
        rep = check_continuous(pts, segs)
        out = {"feasible": rep.feasible, "first_unreachable": rep.first_unreachable}
    else:
        inst = _load_instance(args.input)
        try:
            edges = load_solution(args.solution)
            rep = check_solution(inst, edges)
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise ParseError(f"{args.solution}: {exc}") from exc
        out = rep.to_json()
    _write(args.out, json.dumps(out, sort_keys=True) + "\n")
    return EXIT_OK if rep.feasible else EXIT_INFEASIBLE


def cmd_bench(args) -> int:
    try:
        suite = bench.Suite(
            families=[f for f in args.families.split(",") if f],
            sizes=parse_sizes(args.sizes),
            seeds=parse_seeds(args.seeds),
            requests=args.requests,
            horizon=args.horizon,
            depth=args.depth,
            with_exact=args.exact,
            assert_level=args.assert_level,
        )
    except (ValueError, GenSpecError) as exc:
        raise ParseError(str(exc)) from exc
    report = bench.BenchReport.build(bench.run_suite(suite, args.jobs), suite)
    if args.out:
        Path(f"{args.out}.csv").write_text(report.to_csv())
        Path(f"{args.out}.json").write_text(bench.dumps(report.to_json()))
    if args.format == "csv":
        sys.stdout.write(report.to_csv())
    else:
        sys.stdout.write(bench.dumps(report.aggregate))
    failed = any(r["error"] or not r["bound_satisfied"] for r in report.rows)
    return EXIT_ASSERT if failed else EXIT_OK


def cmd_report(args) -> int:
    try:
        data = json.loads(Path(args.input).read_text())
        rows = data["rows"]
    except (OSError, ValueError, KeyError) as exc:
        raise ParseError(f"{args.input}: {exc}") from exc
    report = bench.BenchReport.build(rows)
    report.suite = data.get("suite")
    if args.format == "csv":
        sys.stdout.write(report.to_csv())
        return EXIT_OK
    agg = report.aggregate
    lines = [f"rows: {agg['rows']}", f"all bounds hold: {agg['all_bounds_hold']}"]
    if agg["rows"]:
        lines.append(f"max ratio vs Triangle: {agg['max_ratio']:.4f}")
        for n, r in agg["by_n"].items():
            lines.append(f"  n={n:>7}  max ratio {r:.4f}")
        for name in ("fit_sqrt_log", "fit_log"):
            f = agg[name]
            if f:
                lines.append(f"{name}: slope {f['slope']:.4f} intercept {f['intercept']:.4f} rss {f['rss']:.5f}")
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mcdline", description="Content delivery on a line: offline, online and benchmarks.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate an instance or a point stream")
    g.add_argument("--family", choices=[*FAMILIES, "binarycascade"], default="uniform")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--N", type=int, default=16)
    g.add_argument("--t-max", type=int, default=32)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--origin", type=int)
    g.add_argument("--clusters", type=int, default=3)
    g.add_argument("--width", type=int)
    g.add_argument("--alpha", type=float, default=0.5)
    g.add_argument("--depth", type=int)
    g.add_argument("--scale", type=float, default=1.0)
    g.add_argument("--points", action="store_true", help="write a JSON-lines point stream instead")
    g.add_argument("-o", "--out")
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="run an algorithm on an instance (or points for onrsa)")
    r.add_argument("algorithm", choices=ALGORITHMS)
    r.add_argument("input")
    r.add_argument("--delta", type=int)
    r.add_argument("--assert-level", choices=ASSERT_LEVELS, default="cheap")
    r.add_argument("--solution", help="where to write the solution JSON")
    r.add_argument("--report", help="where to write the report (default stdout)")
    r.add_argument("--format", choices=("json", "svg"), default="json")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("check", help="verify a solution file")
    c.add_argument("input")
    c.add_argument("solution")
    c.add_argument("--points", action="store_true", help="input is a point stream, solution a segment list")
    c.add_argument("-o", "--out")
    c.set_defaults(func=cmd_check)

    b = sub.add_parser("bench", help="run a benchmark suite")
    b.add_argument("--families", default="uniform")
    b.add_argument("--sizes", default="2^6..2^10")
    b.add_argument("--seeds", default="0:10")
    b.add_argument("--requests", type=int)
    b.add_argument("--horizon", type=int)
    b.add_argument("--depth", type=int)
    b.add_argument("--exact", action="store_true", help="add exact optima where the oracle allows")
    b.add_argument("--assert-level", choices=ASSERT_LEVELS, default="cheap")
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--out", help="write OUT.csv and OUT.json")
    b.add_argument("--format", choices=("json", "csv"), default="json")
    b.set_defaults(func=cmd_bench)

    rp = sub.add_parser("report", help="summarize a bench JSON file")
    rp.add_argument("input")
    rp.add_argument("--format", choices=("text", "csv"), default="text")
    rp.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InstanceTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (InvariantViolation, AssertionError) as exc:
        print(f"assertion failed: {exc}", file=sys.stderr)
        return EXIT_ASSERT


if __name__ == "__main__":
    sys.exit(main())
