"""Benchmark suites: per-instance competitive rows, aggregates, CSV/JSON/SVG output."""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .generators import GenSpec, family_name, generate
from .grid import EdgeKind, GridEdge, Instance
from .online_mcd import competitive_report

SCHEMA = 1
COLUMNS = (
    "family",
    "n",
    "N",
    "seed",
    "delta",
    "cost_lineon",
    "cost_triangle",
    "sum_radii",
    "cost_exact",
    "ratio_vs_triangle",
    "ratio_vs_sum_radii",
    "bound_rhs",
    "bound_satisfied",
    "error",
)


@dataclass
class Suite:
    families: list[str]
    sizes: list[int]
    seeds: list[int]
    requests: int | None = None  # per instance; default min(64, n)
    horizon: int | None = None  # t_max; default 2n
    depth: int | None = None  # cascade depth; default from the request count
    with_exact: bool = False
    assert_level: str = "cheap"

    def __post_init__(self):
        self.families = [family_name(f) for f in self.families]
        for n in self.sizes:
            if n < 2:
                raise ValueError(f"size {n} is below 2")

    def specs(self) -> list[GenSpec]:
        out = []
        for fam in self.families:
            for n in self.sizes:
                for s in self.seeds:
                    N = self.requests if self.requests is not None else min(64, n)
                    t_max = self.horizon if self.horizon is not None else 2 * n
                    out.append(GenSpec(fam, n, N, t_max, seed=s, depth=self.depth))
        return out


def run_row(spec: GenSpec, with_exact: bool = False, assert_level: str = "cheap") -> dict:
    row = dict.fromkeys(COLUMNS)
    row.update(family=spec.family, n=spec.n, seed=spec.seed)
    try:
        inst = generate(spec)
        rep = competitive_report(inst, assert_level=assert_level, with_exact=with_exact)
    except Exception as exc:  # recorded per row; the suite goes on
        row["error"] = f"{type(exc).__name__}: {exc}"
        row["bound_satisfied"] = False
        return row
    row.update(
        N=rep["N"],
        delta=rep["delta_used"],
        cost_lineon=rep["cost_lineon"],
        cost_triangle=rep["cost_triangle"],
        sum_radii=rep["sum_radii"],
        cost_exact=rep["cost_exact"],
        ratio_vs_triangle=rep["ratio_vs_triangle"],
        ratio_vs_sum_radii=rep["ratio_vs_sum_radii"],
        bound_rhs=rep["bound_rhs"],
        bound_satisfied=rep["bound_satisfied"] and rep["feasible"],
    )
    return row


def _row_job(args: tuple[GenSpec, bool, str]) -> dict:
    return run_row(*args)


def run_suite(suite: Suite, jobs: int = 1) -> list[dict]:
    tasks = [(s, suite.with_exact, suite.assert_level) for s in suite.specs()]
    if jobs <= 1 or len(tasks) < 2:
        return [_row_job(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_row_job, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))


def fit(xs: Sequence[float], ys: Sequence[float]) -> dict | None:
    """Least-squares line with its residual sum of squares; None below 3 points."""
    if len(xs) < 3:
        return None
    coef, res, *_ = np.polyfit(np.asarray(xs, float), np.asarray(ys, float), 1, full=True)
    rss = float(res[0]) if len(res) else 0.0
    return {"slope": float(coef[0]), "intercept": float(coef[1]), "rss": rss}


def aggregate(rows: Iterable[dict]) -> dict:
    rows = [r for r in rows if r["error"] is None]
    if not rows:
        return {"rows": 0, "max_ratio": None, "all_bounds_hold": True, "by_n": {}, "fit_sqrt_log": None, "fit_log": None}
    by_n: dict[int, float] = {}
    for r in rows:
        by_n[r["n"]] = max(by_n.get(r["n"], 0.0), r["ratio_vs_triangle"])
    ns = sorted(by_n)
    logs = [math.log2(n) for n in ns]
    peak = [by_n[n] for n in ns]
    return {
        "rows": len(rows),
        "max_ratio": max(r["ratio_vs_triangle"] for r in rows),
        "max_ratio_vs_sum_radii": max(r["ratio_vs_sum_radii"] for r in rows),
        "all_bounds_hold": all(r["bound_satisfied"] for r in rows),
        "by_n": {str(n): by_n[n] for n in ns},
        "fit_sqrt_log": fit([math.sqrt(x) for x in logs], peak),
        "fit_log": fit(logs, peak),
    }


@dataclass
class BenchReport:
    rows: list[dict]
    aggregate: dict = field(default_factory=dict)
    suite: dict | None = None

    @classmethod
    def build(cls, rows: list[dict], suite: Suite | None = None) -> "BenchReport":
        return cls(rows, aggregate(rows), asdict(suite) if suite else None)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: _fmt(r[k]) for k in COLUMNS})
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA,
            "log_base": 2,
            "note": "every log in the bound formulas is log2; bound_rhs = 8 + sqrt(10 log2 padded_n)",
            "columns": list(COLUMNS),
            "suite": self.suite,
            "aggregate": self.aggregate,
            "rows": self.rows,
        }


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.6f}"
    return v


def svg_solutions(inst: Instance, solutions: dict[str, set[GridEdge]], cell: int = 12) -> str:
    """Static side-by-side drawing of grid solutions; time grows upward."""
    t_top = max([inst.t_max, *(e.time + 1 for edges in solutions.values() for e in edges)], default=1)
    width = (inst.n + 1) * cell
    height = (t_top + 2) * cell
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width * max(1, len(solutions))}" height="{height + 16}">'
    ]

    def px(k: int, v: float, t: float) -> tuple[float, float]:
        return k * width + v * cell, height - (t + 1) * cell

    for k, (name, edges) in enumerate(sorted(solutions.items())):
        out.append(f'<text x="{k * width + 4}" y="{height + 12}" font-size="11">{name} ({len(edges)})</text>')
        for e in sorted(edges, key=lambda e: (e.time, e.node, e.kind.value)):
            x1, y1 = px(k, e.node, e.time)
            x2, y2 = px(k, e.node + 1, e.time) if e.kind is EdgeKind.H else px(k, e.node, e.time + 1)
            color = "#1f77b4" if e.kind is EdgeKind.H else "#d62728"
            out.append(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="{color}" stroke-width="2"/>')
        for v, t in inst.requests:
            x, y = px(k, v, t)
            out.append(f'<circle cx="{x}" cy="{y}" r="3" fill="black"/>')
        x, y = px(k, inst.origin, 0)
        out.append(f'<rect x="{x - 3}" y="{y - 3}" width="6" height="6" fill="green"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"
