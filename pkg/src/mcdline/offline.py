"""Offline side: algorithm Triangle, the feasibility checker and the exact oracle."""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .grid import EdgeKind, GridEdge, Instance, Replica, arc, hedge
from .steiner import brute_force_cost, steiner_arborescence

MAX_ORACLE_REQUESTS = 10
MAX_ORACLE_CELLS = 4096


class InstanceTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class TriangleStep:
    request: Replica
    serving: Replica
    radius: int
    base_lo: int
    base_hi: int
    arcs: tuple[GridEdge, ...]
    hedges: tuple[GridEdge, ...]

    @property
    def base(self) -> set[Replica]:
        t = self.request.time
        return {Replica(v, t) for v in range(self.base_lo, self.base_hi + 1)}

    @property
    def base_edges(self) -> set[GridEdge]:
        """Every horizontal edge inside the base, including skipped ones."""
        t = self.request.time
        return {hedge(v, t) for v in range(self.base_lo, self.base_hi)}

    @property
    def added_cost(self) -> int:
        return len(self.arcs) + len(self.hedges)


class TriangleBuilder:
    """Runs Triangle one request at a time (requests must arrive time-ordered).

    Every replica of the solution is at or below the current request time,
    so per node only its latest replica can be nearest; ``latest`` holds it.
    """

    def __init__(self, n: int, origin: int):
        self.n = n
        self.origin = origin
        self.latest = np.full(n + 1, -1, dtype=np.int64)
        self.latest[origin] = 0
        self.steps: list[TriangleStep] = []
        self.h_edges: set[GridEdge] = set()
        self.a_edges: set[GridEdge] = set()
        self._nodes = np.arange(n + 1)

    def add(self, request: Replica) -> TriangleStep:
        v, t = request
        if self.steps and t < self.steps[-1].request.time:
            raise ValueError("requests must be time-ordered")
        latest = self.latest
        held = latest >= 0
        dist = np.where(held, t - latest + np.abs(self._nodes - v), np.iinfo(np.int64).max)
        u = int(np.argmin(dist))  # ties: smallest node (the latest replica per node is the nearest)
        s = int(latest[u])
        rho = int(dist[u])

        arcs = tuple(arc(u, k) for k in range(s, t))
        lo, hi = max(1, v - rho), min(self.n, v + rho)
        if arcs:
            latest[u] = t
        # Sweeping left to right, edge j closes a cycle iff its right end is
        # already on the tree and so is something at or left of its left end.
        present = latest[lo : hi + 1] == t
        skip = present[1:] & np.logical_or.accumulate(present)[:-1]
        hedges = [hedge(lo + int(j), t) for j in np.flatnonzero(~skip)]
        latest[lo : hi + 1] = t

        step = TriangleStep(request, Replica(u, s), rho, lo, hi, arcs, tuple(hedges))
        self.steps.append(step)
        self.a_edges.update(arcs)
        self.h_edges.update(hedges)
        return step

    def trace(self) -> "TriangleTrace":
        return TriangleTrace(self.n, self.origin, list(self.steps), set(self.h_edges), set(self.a_edges))


@dataclass
class TriangleTrace:
    n: int
    origin: int
    steps: list[TriangleStep]
    h_edges: set[GridEdge]
    a_edges: set[GridEdge]

    @property
    def edges(self) -> set[GridEdge]:
        return self.h_edges | self.a_edges

    @property
    def cost(self) -> int:
        return len(self.h_edges) + len(self.a_edges)

    @property
    def base(self) -> set[Replica]:
        out: set[Replica] = set()
        for s in self.steps:
            out |= s.base
        return out

    def base_size(self) -> int:
        """|Base| without materialising it."""
        by_time: dict[int, list[tuple[int, int]]] = {}
        for s in self.steps:
            by_time.setdefault(s.request.time, []).append((s.base_lo, s.base_hi))
        return sum(_union_length(spans) for spans in by_time.values())


def _union_length(spans: list[tuple[int, int]]) -> int:
    total, end = 0, -1
    for lo, hi in sorted(spans):
        if hi <= end:
            continue
        total += hi - max(lo, end + 1) + 1
        end = hi
    return total


def run_triangle(inst: Instance) -> TriangleTrace:
    tb = TriangleBuilder(inst.n, inst.origin)
    for r in inst.requests:
        tb.add(r)
    return tb.trace()


def sum_radii(trace: TriangleTrace) -> int:
    return sum(s.radius for s in trace.steps)


@dataclass
class SolutionReport:
    edges: set[GridEdge]
    feasible: bool
    witnesses: dict[int, list[Replica]] = field(default_factory=dict)
    first_unreachable: int | None = None

    @property
    def horizontal_cost(self) -> int:
        return sum(1 for e in self.edges if e.kind is EdgeKind.H)

    @property
    def arc_cost(self) -> int:
        return sum(1 for e in self.edges if e.kind is EdgeKind.A)

    @property
    def total_cost(self) -> int:
        return len(self.edges)

    def to_json(self, with_edges: bool = False) -> dict:
        d = {
            "feasible": self.feasible,
            "total_cost": self.total_cost,
            "horizontal_cost": self.horizontal_cost,
            "arc_cost": self.arc_cost,
            "first_unreachable": self.first_unreachable,
            "witnesses": {str(i): [list(r) for r in p] for i, p in sorted(self.witnesses.items())},
        }
        if with_edges:
            d["edges"] = solution_to_json(self.edges)["edges"]
        return d


def solution_to_json(edges: Iterable[GridEdge]) -> dict:
    return {"edges": [e.to_json() for e in sorted(edges, key=lambda e: (e.time, e.node, e.kind.value))]}


def solution_from_json(d: dict) -> set[GridEdge]:
    return {GridEdge.from_json(e) for e in d["edges"]}


def save_solution(edges: Iterable[GridEdge], path: str | Path) -> None:
    Path(path).write_text(json.dumps(solution_to_json(edges)) + "\n")


def load_solution(path: str | Path) -> set[GridEdge]:
    return solution_from_json(json.loads(Path(path).read_text()))


def check_solution(inst: Instance, edges: Iterable[GridEdge], witnesses: bool = True) -> SolutionReport:
    """Reachability of every request from the root along the edge set.

    Horizontal edges are walked both ways, arcs only upward, so any path
    found is y-monotone.
    """
    edges = set(edges)
    n = inst.n
    adj: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for kind, v, t in edges:
        if v < 1 or t < 0 or v > n or (kind is EdgeKind.H and v + 1 > n):
            raise ValueError(f"edge {GridEdge(kind, v, t)} outside the grid of size {n}")
        a = (v, t)
        if kind is EdgeKind.H:
            b = (v + 1, t)
            adj.setdefault(b, []).append(a)
        else:
            b = (v, t + 1)
        adj.setdefault(a, []).append(b)

    root = tuple(inst.root)
    parent: dict[tuple[int, int], tuple[int, int] | None] = {root: None}
    queue = deque([root])
    while queue:
        x = queue.popleft()
        for y in adj.get(x, ()):
            if y not in parent:
                parent[y] = x
                queue.append(y)

    report = SolutionReport(edges, True)
    for i, r in enumerate(inst.requests):
        if r not in parent:
            report.feasible = False
            report.first_unreachable = i
            break
        if witnesses:
            path = [tuple(r)]
            while parent[path[-1]] is not None:
                path.append(parent[path[-1]])
            report.witnesses[i] = [Replica(*x) for x in reversed(path)]
    return report


def _guard(inst: Instance) -> None:
    if len(inst.requests) > MAX_ORACLE_REQUESTS:
        raise InstanceTooLarge(f"{len(inst.requests)} requests exceed the oracle limit {MAX_ORACLE_REQUESTS}")
    cells = inst.n * (inst.t_max + 1)
    if cells > MAX_ORACLE_CELLS:
        raise InstanceTooLarge(f"grid of {cells} replicas exceeds the oracle limit {MAX_ORACLE_CELLS}")


def exact_opt(inst: Instance) -> SolutionReport:
    """A minimum-size feasible edge set, via subset DP over the requests."""
    _guard(inst)
    xs = list(range(1, inst.n + 1))
    ys = list(range(inst.t_max + 1))
    terms = [(t, v - 1) for v, t in inst.requests]
    cost, moves = steiner_arborescence(xs, ys, (0, inst.origin - 1), terms)
    edges = {arc(c + 1, r) if kind == "a" else hedge(c + 1, r) for kind, r, c in moves}
    if len(edges) != round(cost):
        raise AssertionError(f"rebuilt {len(edges)} edges for optimum {cost}")
    return check_solution(inst, edges)


def brute_force_opt(inst: Instance) -> int:
    """Optimum cost by exhaustive subset search; tiny instances only."""
    if inst.n * (inst.t_max + 1) > 24:
        raise InstanceTooLarge("exhaustive search is limited to 24 replicas")
    terms = [(v - 1, t) for v, t in inst.requests]
    return brute_force_cost(inst.n, inst.t_max, (inst.origin - 1, 0), terms)


def opt_with_root(inst: Instance, report: SolutionReport) -> int:
    """Optimum plus the root-column arcs it lacks (the keep-a-copy variant)."""
    have = sum(1 for e in report.edges if e.kind is EdgeKind.A and e.node == inst.origin and e.time < inst.t_max)
    return report.total_cost + max(0, inst.t_max - have)
