"""Algorithm lineon: online content delivery on a line.

Each time step has a delivery phase (serve the step's requests from the
copies present at that time, plus the Triangle base of every request) and a
storage phase (decide which copies survive to the next step).  A copy is
kept in the neighborhood of every interval that is still "stay-active",
i.e. saw a Triangle base replica recently relative to its level.
"""
from __future__ import annotations

import json
import math
from bisect import bisect_left, bisect_right, insort
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from .grid import (
    EdgeKind,
    GridEdge,
    Instance,
    Interval,
    Replica,
    arc,
    auto_delta,
    hedge,
    num_levels,
    padded_size,
)
from .offline import (
    InstanceTooLarge,
    SolutionReport,
    TriangleBuilder,
    TriangleTrace,
    check_solution,
    exact_opt,
    opt_with_root,
    run_triangle,
    sum_radii,
)

ASSERT_LEVELS = ("off", "cheap", "full")


class InvariantViolation(AssertionError):
    """A runtime check derived from the analysis of lineon failed."""

    def __init__(self, name: str, detail: str):
        super().__init__(f"{name}: {detail}")
        self.name = name
        self.detail = detail


class CommitRecord(NamedTuple):
    level: int
    index: int
    time: int
    node: int  # node of the replica lifted to the next step

    def interval(self, delta: int, padded_n: int) -> Interval:
        return Interval(self.level, self.index, delta, padded_n)

    @property
    def stored_replica(self) -> Replica:
        return Replica(self.node, self.time + 1)


def bound_rhs(padded_n: int) -> float:
    """Competitive factor against Triangle: 8 + sqrt(10 log2 n)."""
    return 8 + math.sqrt(10 * math.log2(padded_n)) if padded_n > 1 else 8.0


def _nearest(sorted_nodes: list[int], v: int) -> int | None:
    """Closest node to v (ties to the smaller node)."""
    i = bisect_left(sorted_nodes, v)
    best = None
    for j in (i - 1, i):
        if 0 <= j < len(sorted_nodes):
            u = sorted_nodes[j]
            if best is None or abs(u - v) < abs(best - v):
                best = u
    return best


class LineOn:
    """Incremental lineon run.

    Feed requests in time order through :meth:`serve`; clock ticks happen
    implicitly (or through :meth:`advance_to`).  Call :meth:`finish` after the
    last request to run the end-of-run checks.
    """

    def __init__(
        self,
        n: int,
        origin: int,
        delta: int | None = None,
        assert_level: str = "cheap",
        log_events: bool = False,
        fast_forward: bool | None = None,
        keep_history: bool | None = None,
    ):
        if assert_level not in ASSERT_LEVELS:
            raise ValueError(f"assert_level must be one of {ASSERT_LEVELS}")
        self.n = n
        self.origin = origin
        if delta is None:
            self.delta, self.padded_n = auto_delta(n)
        else:
            if delta < 1:
                raise ValueError("delta must be positive")
            self.delta, self.padded_n = delta, padded_size(n, delta)
        self.n_levels = num_levels(self.padded_n, self.delta)
        self.assert_level = assert_level
        full = assert_level == "full"
        self.fast_forward = (not full) if fast_forward is None else fast_forward
        self.keep_history = full if keep_history is None else keep_history

        self.triangle = TriangleBuilder(n, origin)
        self.t = 0
        self.cache: list[int] = [origin]  # nodes of C_t, sorted
        self.h_edges: set[GridEdge] = set()
        self.a_edges: set[GridEdge] = set()
        self.commits: list[CommitRecord] = []
        self.r_on: list[int] = []
        self.q_on: list[Replica] = []
        self.events: list[dict] | None = [] if log_events else None
        self.history: dict[int, tuple[int, ...]] = {0: (origin,)} if self.keep_history else {}
        self.obs3_equal: bool | None = None
        self.finished = False
        self.steps_skipped = 0

        # per level: interval index -> last time a base replica fell inside it
        self._last_base: list[dict[int, int]] = [dict() for _ in range(self.n_levels)]
        self._base_spans: list[tuple[int, int]] = []  # base ranges at the current time
        self._present: list[tuple[int, int]] = [(origin, origin)]  # node spans holding a copy now
        self._base_by_time: dict[int, list[tuple[int, int]]] = {}

    # -- views matching the state vocabulary -------------------------------
    @property
    def current_time(self) -> int:
        return self.t

    @property
    def solution_h(self) -> set[GridEdge]:
        return self.h_edges

    @property
    def solution_a(self) -> set[GridEdge]:
        return self.a_edges

    @property
    def commit_ledger(self) -> list[CommitRecord]:
        return self.commits

    @property
    def triangle_sim(self) -> TriangleTrace:
        return self.triangle.trace()

    @property
    def edges(self) -> set[GridEdge]:
        return self.h_edges | self.a_edges

    @property
    def cost(self) -> int:
        return len(self.h_edges) + len(self.a_edges)

    def base_replicas(self) -> set[Replica]:
        return {
            Replica(v, t)
            for t, spans in self._base_by_time.items()
            for lo, hi in spans
            for v in range(lo, hi + 1)
        }

    # -- delivery ------------------------------------------------------------
    def serve(self, request: Replica) -> int:
        """Delivery phase for one request; returns its online radius."""
        v, t = request
        if self.finished:
            raise RuntimeError("run already finished")
        if t < self.t:
            raise ValueError(f"request {request} arrives after time {self.t} was closed")
        if not 1 <= v <= self.n:
            raise ValueError(f"request node {v} outside [1, {self.n}]")
        self.advance_to(t)

        step = self.triangle.add(Replica(v, t))
        rho = step.radius
        u = self._nearest_present(v)
        r_on = abs(u - v)
        lo, hi = step.base_lo, step.base_hi
        a, b = min(lo, u, v), max(hi, u, v)

        # Present replicas all hang off one tree; same left-to-right cycle rule as Triangle.
        present = self._present_mask(a, b)
        skip = present[1:] & np.logical_or.accumulate(present)[:-1]
        added = [hedge(a + int(j), t) for j in np.flatnonzero(~skip)]
        self.h_edges.update(added)
        self._add_present(a, b)
        self._base_spans.append((lo, hi))
        self._base_by_time.setdefault(t, []).append((lo, hi))
        for level in range(self.n_levels):
            size = self.delta << level
            d = self._last_base[level]
            for k in range((lo - 1) // size + 1, (hi - 1) // size + 2):
                d[k] = t

        self.r_on.append(r_on)
        self.q_on.append(Replica(u, t))
        if self.assert_level != "off" and r_on > (4 * self.delta + 1) * rho:
            raise InvariantViolation(
                "delivery lemma", f"request {request}: online radius {r_on} > (4*{self.delta}+1)*{rho}"
            )
        if self.events is not None:
            self.events.append(
                {
                    "t": t,
                    "phase": "deliver",
                    "request": [v, t],
                    "q_on": [u, t],
                    "r_on": r_on,
                    "rho": rho,
                    "commits": [],
                    "edges": [e.to_json() for e in added],
                }
            )
        return r_on

    def _nearest_present(self, v: int) -> int:
        spans = self._present
        i = bisect_right(spans, (v, math.inf))
        best = None
        for j in (i - 1, i):
            if 0 <= j < len(spans):
                lo, hi = spans[j]
                u = min(max(v, lo), hi)
                if best is None or abs(u - v) < abs(best - v) or (abs(u - v) == abs(best - v) and u < best):
                    best = u
        return best

    def _present_mask(self, a: int, b: int) -> np.ndarray:
        mask = np.zeros(b - a + 1, dtype=bool)
        spans = self._present
        i = max(0, bisect_right(spans, (a, math.inf)) - 1)
        while i < len(spans) and spans[i][0] <= b:
            lo, hi = spans[i]
            if hi >= a:
                mask[max(lo, a) - a : min(hi, b) - a + 1] = True
            i += 1
        return mask

    def _add_present(self, a: int, b: int) -> None:
        out = []
        for lo, hi in self._present:
            if hi < a - 1 or lo > b + 1:
                out.append((lo, hi))
            else:
                a, b = min(a, lo), max(b, hi)
        out.append((a, b))
        out.sort()
        self._present = out

    # -- storage ---------------------------------------------------------------
    def _stay_active(self, level: int, t: int) -> list[int]:
        thr = t - (1 << level) + 1
        d = self._last_base[level]
        stale = [k for k, last in d.items() if last < thr]
        for k in stale:
            del d[k]
        return sorted(d)

    def _candidate(self, a: int, b: int, mid2: int) -> int | None:
        """Node of C_t or the current base inside [a, b] closest to mid2/2."""
        best = None

        def consider(u: int) -> None:
            nonlocal best
            if best is None or (abs(2 * u - mid2), u) < (abs(2 * best - mid2), best):
                best = u

        cache = self.cache
        i = bisect_left(cache, mid2 // 2)
        for j in (i - 1, i, i + 1):
            if 0 <= j < len(cache) and a <= cache[j] <= b:
                consider(cache[j])
        # the nearest in-range cache node may sit beyond the probed neighbors
        j = bisect_left(cache, a)
        if j < len(cache) and cache[j] <= b:
            consider(cache[j])
        j = bisect_right(cache, b) - 1
        if j >= 0 and cache[j] >= a:
            consider(cache[j])
        for lo, hi in self._base_spans:
            p, q = max(lo, a), min(hi, b)
            if p > q:
                continue
            for u in (mid2 // 2, (mid2 + 1) // 2):
                consider(min(max(u, p), q))
        return best

    def store(self) -> list[CommitRecord]:
        """Storage phase of the current time, then advance the clock by one."""
        t = self.t
        full = self.assert_level == "full"
        if full:
            self._check_observation2(t)
        selected = [self.origin]
        step_commits: list[CommitRecord] = []
        for level in range(self.n_levels):
            size = self.delta << level
            for k in self._stay_active(level, t):
                lo, hi = (k - 1) * size + 1, k * size
                a, b = max(1, lo - size), min(self.padded_n, hi + size)
                j = bisect_left(selected, a)
                if j < len(selected) and selected[j] <= b:
                    continue
                node = self._candidate(a, b, lo + hi)
                if node is None:
                    if self.assert_level != "off":
                        raise InvariantViolation(
                            "observation 1 (well defined)",
                            f"interval level {level} index {k} stay-active at {t} has no candidate copy",
                        )
                    continue
                insort(selected, node)
                step_commits.append(CommitRecord(level, k, t, node))
        if full:
            self._check_claim2(step_commits)
        self._apply_storage(t, selected, step_commits)
        return step_commits

    def _apply_storage(self, t: int, selected: list[int], step_commits: list[CommitRecord]) -> None:
        self.commits.extend(step_commits)
        self.a_edges.update(arc(v, t) for v in selected)
        if self.events is not None:
            self.events.append(
                {
                    "t": t,
                    "phase": "store",
                    "commits": [[c.level, c.index, c.node] for c in step_commits],
                    "edges": [arc(v, t).to_json() for v in selected],
                }
            )
        self.cache = selected
        self._present = [(v, v) for v in selected]
        self._base_spans = []
        self.t = t + 1
        if self.keep_history:
            self.history[self.t] = tuple(selected)

    def advance_to(self, target: int) -> None:
        """Run storage phases until the clock reads ``target``."""
        while self.t < target:
            t0 = self.t
            prev = self.cache
            had_base = bool(self._base_spans)
            step_commits = self.store()
            if not self.fast_forward or had_base or self.cache != prev:
                continue
            # Step t0 was a fixed point: no base, C_{t0+1} == C_t0.  Until some
            # stay-active interval expires every later step repeats it exactly.
            horizon = target - 1
            for level in range(self.n_levels):
                w = 1 << level
                for last in self._last_base[level].values():
                    horizon = min(horizon, last + w - 1)
            for t in range(t0 + 1, horizon + 1):
                self._apply_storage(t, self.cache, [c._replace(time=t) for c in step_commits])
                self.steps_skipped += 1

    # -- checks ----------------------------------------------------------------
    def _check_observation2(self, t: int) -> None:
        """Every active interval has a base replica or a copy in its neighborhood at t."""
        base_now = self._base_spans
        for level in range(self.n_levels):
            size = self.delta << level
            thr = t - (1 << level)
            for k, last in self._last_base[level].items():
                if last < thr:
                    continue
                lo, hi = (k - 1) * size + 1, k * size
                a, b = max(1, lo - size), min(self.padded_n, hi + size)
                if any(p <= b and q >= a for p, q in base_now):
                    continue
                j = bisect_left(self.cache, a)
                if j < len(self.cache) and self.cache[j] <= b:
                    continue
                raise InvariantViolation(
                    "observation 2 (active interval has a nearby copy)",
                    f"level {level} index {k} active at {t} with no copy or base in its neighborhood",
                )

    def _check_claim2(self, step_commits: list[CommitRecord]) -> None:
        """No node lies in the neighborhoods of more than 3 intervals committing together."""
        events = []
        for c in step_commits:
            size = self.delta << c.level
            lo, hi = (c.index - 1) * size + 1, c.index * size
            events.append((max(1, lo - size), 1))
            events.append((min(self.padded_n, hi + size) + 1, -1))
        depth = 0
        for _, d in sorted(events):
            depth += d
            if depth > 3:
                raise InvariantViolation(
                    "claim 2 (three commits per node)",
                    f"at time {step_commits[0].time} some node is covered by {depth} committing neighborhoods",
                )

    def _check_claim1(self) -> None:
        t_last = self.t
        for t, spans in self._base_by_time.items():
            for rho in sorted({*(1 << k for k in range(t_last.bit_length() + 1)), *range(1, 9)}):
                if t + rho > t_last:
                    break
                cache = list(self.history[t + rho])
                limit = 4 * self.delta * rho
                for lo, hi in spans:
                    for v in range(lo, hi + 1):
                        w = _nearest(cache, v)
                        if abs(w - v) > limit:
                            raise InvariantViolation(
                                "claim 1 (copy within 4*delta*rho)",
                                f"base ({v},{t}), rho={rho}: nearest copy at {w}",
                            )

    def finish(self) -> None:
        """End-of-run invariants (Observation 3, the delivery corollary, the commit lemma)."""
        if self.finished:
            return
        self.finished = True
        if self.assert_level == "off":
            return
        if self.assert_level == "full":
            self._check_observation2(self.t)
            self._check_claim1()
        t_n = self.t
        off_root = sum(1 for e in self.a_edges if not (e.node == self.origin and e.time < t_n))
        self.obs3_equal = off_root == len(self.commits)
        if off_root > len(self.commits):
            raise InvariantViolation("observation 3", f"{off_root} off-root arcs > {len(self.commits)} commits")
        tr = self.triangle
        radii = sum(s.radius for s in tr.steps)
        if len(self.h_edges) > sum(r + 2 * s.radius for r, s in zip(self.r_on, tr.steps)):
            raise InvariantViolation("delivery corollary", "|H_on| exceeds sum of r_on + 2 rho")
        if len(self.h_edges) > (4 * self.delta + 3) * radii:
            raise InvariantViolation(
                "delivery corollary", f"|H_on|={len(self.h_edges)} > (4*{self.delta}+3)*{radii}"
            )
        rhs = self.commit_bound()
        if len(self.commits) > rhs:
            raise InvariantViolation("commit lemma", f"|COMMIT|={len(self.commits)} > {rhs:.3f}")

    def commit_bound(self) -> float:
        tr = self.triangle.trace()
        log_n = math.log2(self.padded_n) if self.padded_n > 1 else 0.0
        return 3 * len(tr.a_edges) + 6 * log_n / self.delta * len(tr.h_edges) + tr.base_size()

    def write_trace(self, path: str | Path) -> None:
        if self.events is None:
            raise RuntimeError("event logging was not enabled")
        with open(path, "w") as fh:
            for ev in self.events:
                fh.write(json.dumps(ev) + "\n")


OnlineState = LineOn


def run_lineon(
    inst: Instance,
    delta: int | None = None,
    assert_level: str = "cheap",
    log_events: bool = False,
    fast_forward: bool | None = None,
) -> tuple[LineOn, SolutionReport]:
    state = LineOn(inst.n, inst.origin, delta, assert_level, log_events, fast_forward)
    for r in inst.requests:
        state.serve(r)
    state.advance_to(inst.t_max)
    state.finish()
    return state, check_solution(inst, state.edges, witnesses=False)


def audit_causality(events: Iterable[dict]) -> tuple[bool, str | None]:
    """Replay an event log and check every edge against the online decision rules.

    Delivery events at time t may only add horizontal edges of time t;
    storage events at time t may only add arcs leaving a time-t replica that
    is already in the solution.  The clock never runs backwards.
    """
    vertices: set[tuple[int, int]] = set()
    clock = -1
    for i, ev in enumerate(events):
        t = ev["t"]
        if t < clock:
            return False, f"event {i}: time {t} after time {clock}"
        clock = t
        if ev["phase"] == "start":
            vertices.add((ev["origin"], 0))
            continue
        for e in ev.get("edges", ()):
            kind, v, et = e["kind"], e["node"], e["time"]
            if ev["phase"] == "deliver":
                if kind != "h":
                    return False, f"event {i}: arc ({v},{et}) added while delivering"
                if et != t:
                    return False, f"event {i}: horizontal edge at time {et} added at time {t}"
                vertices.update({(v, et), (v + 1, et)})
            elif ev["phase"] == "store":
                if kind != "a":
                    return False, f"event {i}: horizontal edge added while storing"
                if et != t:
                    return False, f"event {i}: retroactive arc ({v},{et}) added at time {t}"
                if (v, et) not in vertices:
                    return False, f"event {i}: arc leaves ({v},{et}) which holds no copy"
                vertices.add((v, et + 1))
            else:
                return False, f"event {i}: unknown phase {ev['phase']!r}"
    return True, None


def lineon_events(state: LineOn) -> list[dict]:
    if state.events is None:
        raise RuntimeError("event logging was not enabled")
    return [{"t": 0, "phase": "start", "origin": state.origin, "edges": []}] + state.events


def triangle_as_online_log(inst: Instance, trace: TriangleTrace | None = None) -> list[dict]:
    """Triangle's edge additions replayed as if an online algorithm made them.

    Arcs are charged to a storage event at the request time, the moment
    Triangle decides them; they are retroactive whenever the serving replica
    is older than the request.
    """
    trace = trace or run_triangle(inst)
    out: list[dict] = [{"t": 0, "phase": "start", "origin": inst.origin, "edges": []}]
    for s in trace.steps:
        t = s.request.time
        out.append({"t": t, "phase": "store", "edges": [e.to_json() for e in s.arcs]})
        out.append({"t": t, "phase": "deliver", "request": list(s.request), "edges": [e.to_json() for e in s.hedges]})
    return out


def competitive_report(
    inst: Instance,
    delta: int | None = None,
    assert_level: str = "cheap",
    with_exact: bool = True,
) -> dict:
    state, report = run_lineon(inst, delta, assert_level)
    trace = state.triangle_sim
    cost_on, cost_tri = state.cost, trace.cost
    radii = sum_radii(trace)
    rhs = bound_rhs(state.padded_n)
    row = {
        "n": inst.n,
        "N": len(inst.requests),
        "t_max": inst.t_max,
        "delta_used": state.delta,
        "padded_n": state.padded_n,
        "cost_lineon": cost_on,
        "cost_triangle": cost_tri,
        "sum_radii": radii,
        "commits": len(state.commits),
        "cost_exact": None,
        "cost_exact_with_root": None,
        "ratio_vs_triangle": safe_ratio(cost_on, cost_tri),
        "ratio_vs_sum_radii": safe_ratio(cost_on, radii),
        "ratio_vs_exact": None,
        "bound_rhs": rhs,
        "bound_satisfied": cost_on <= rhs * cost_tri,
        "feasible": report.feasible,
    }
    if with_exact:
        try:
            exact = exact_opt(inst)
        except InstanceTooLarge:
            pass
        else:
            row["cost_exact"] = exact.total_cost
            row["cost_exact_with_root"] = opt_with_root(inst, exact)
            row["ratio_vs_exact"] = safe_ratio(cost_on, exact.total_cost)
    return row


def safe_ratio(a: float, b: float) -> float:
    """a / b, with 0/0 read as a perfect ratio of 1."""
    if b == 0:
        return 1.0 if a == 0 else math.inf
    return a / b
