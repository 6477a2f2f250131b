"""Continuous rectilinear arborescences: onRSA and its use for few-request MCD (lineonp).

onRSA guesses the number of points and their horizontal extent, lays a
uniform grid over [0, M] with M/n edge length, and drives an incremental
lineon run on that grid.  Grid decisions are realized as segments:

* a storage arc (v, t) becomes a vertical piece over one grid time step;
* a delivery at grid time tau for a point at height y is drawn at y itself,
  and every column newly reached is extended up to the top of the step so
  later deliveries of the same step can start from it;
* a short horizontal connector joins the grid column to the point.

A point is mapped to the step whose top is at or above it, so nothing is
ever drawn below the point that caused it.
"""
from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .grid import EdgeKind, GridEdge, Instance, Replica, arc, hedge
from .offline import InstanceTooLarge, SolutionReport, check_solution
from .online_mcd import LineOn, run_lineon
from .steiner import steiner_arborescence

_QEPS = 1e-9  # tolerance on dimensionless grid coordinates
MAX_HANAN_POINTS = 10
PHASE_HEIGHT = 4  # a phase spans at most this many times M_guess vertically


class Orientation(str, Enum):
    H = "h"
    V = "v"


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (self.x >= 0 and self.y >= 0) or math.isinf(self.x) or math.isinf(self.y):
            raise ValueError(f"point ({self.x}, {self.y}) is outside the positive quadrant")

    def to_json(self) -> dict:
        return {"x": self.x, "y": self.y}


@dataclass(frozen=True)
class Segment:
    """Axis-parallel piece starting at (x0, y0); vertical ones point up."""

    orientation: Orientation
    x0: float
    y0: float
    length: float

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError("segment length must be positive")

    @property
    def start(self) -> Point:
        return Point(self.x0, self.y0)

    @property
    def end(self) -> Point:
        if self.orientation is Orientation.H:
            return Point(self.x0 + self.length, self.y0)
        return Point(self.x0, self.y0 + self.length)

    def to_json(self) -> dict:
        return {"orientation": self.orientation.value, "x0": self.x0, "y0": self.y0, "length": self.length}

    @classmethod
    def from_json(cls, d: dict) -> "Segment":
        return cls(Orientation(d["orientation"]), float(d["x0"]), float(d["y0"]), float(d["length"]))


def hseg(xa: float, xb: float, y: float) -> Segment | None:
    lo, hi = min(xa, xb), max(xa, xb)
    return Segment(Orientation.H, lo, y, hi - lo) if hi > lo else None


def vseg(x: float, ya: float, yb: float) -> Segment | None:
    return Segment(Orientation.V, x, ya, yb - ya) if yb > ya else None


def _eps(values: Iterable[float]) -> float:
    return 1e-9 * max([1.0, *(abs(v) for v in values)])


def merge_segments(segments: Iterable[Segment]) -> list[Segment]:
    """Maximal collinear pieces; overlapping or touching parts are fused."""
    segments = list(segments)
    if not segments:
        return []
    eps = _eps(c for s in segments for c in (s.x0, s.y0, s.x0 + s.length, s.y0 + s.length))
    lines: dict[tuple[Orientation, float], list[tuple[float, float]]] = {}
    for s in segments:
        if s.orientation is Orientation.H:
            lines.setdefault((s.orientation, s.y0), []).append((s.x0, s.x0 + s.length))
        else:
            lines.setdefault((s.orientation, s.x0), []).append((s.y0, s.y0 + s.length))
    out: list[Segment] = []
    for (kind, c), spans in sorted(lines.items(), key=lambda kv: (kv[0][0].value, kv[0][1])):
        spans.sort()
        lo, hi = spans[0]
        for a, b in spans[1:]:
            if a <= hi + eps:
                hi = max(hi, b)
                continue
            out.append(_mk(kind, c, lo, hi))
            lo, hi = a, b
        out.append(_mk(kind, c, lo, hi))
    return out


def _mk(kind: Orientation, c: float, lo: float, hi: float) -> Segment:
    if kind is Orientation.H:
        return Segment(kind, lo, c, hi - lo)
    return Segment(kind, c, lo, hi - lo)


def total_length(segments: Iterable[Segment]) -> float:
    return float(sum(s.length for s in merge_segments(segments)))


@dataclass
class ContinuousReport:
    feasible: bool
    first_unreachable: int | None = None


def check_continuous(points: Sequence[Point], segments: Iterable[Segment]) -> ContinuousReport:
    """Is every point reachable from (0,0) along a y-monotone path in the segments?

    Sweeps upward: a vertical piece is entered at its lowest reached height
    and is usable from there to its top; a horizontal piece is usable along
    its whole length once any point of it is reached.
    """
    segs = merge_segments(segments)
    coords = [c for s in segs for c in (s.x0, s.y0, s.x0 + s.length, s.y0 + s.length)]
    coords += [c for p in points for c in (p.x, p.y)]
    eps = _eps(coords)
    hs = [s for s in segs if s.orientation is Orientation.H]
    vs = [s for s in segs if s.orientation is Orientation.V]
    hx0 = np.array([s.x0 for s in hs])
    hx1 = np.array([s.x0 + s.length for s in hs])
    hy = np.array([s.y0 for s in hs])
    vx = np.array([s.x0 for s in vs])
    vy0 = np.array([s.y0 for s in vs])
    vy1 = np.array([s.y0 + s.length for s in vs])

    h_reached = np.zeros(len(hs), dtype=bool)
    v_entry = np.full(len(vs), np.inf)
    heap: list[tuple[float, int, int]] = []  # (y, 0 = horizontal / 1 = vertical, index)

    def reach_at(x: float, y: float) -> None:
        """Mark everything usable from the point (x, y)."""
        if len(hs):
            for i in np.flatnonzero(~h_reached & (np.abs(hy - y) <= eps) & (hx0 <= x + eps) & (hx1 >= x - eps)):
                h_reached[i] = True
                heapq.heappush(heap, (float(hy[i]), 0, int(i)))
        if len(vs):
            hit = (np.abs(vx - x) <= eps) & (vy0 <= y + eps) & (vy1 > y + eps) & (v_entry > y)
            for i in np.flatnonzero(hit):
                v_entry[i] = y
                heapq.heappush(heap, (y, 1, int(i)))

    reach_at(0.0, 0.0)
    done_v = np.zeros(len(vs), dtype=bool)
    while heap:
        y, kind, i = heapq.heappop(heap)
        if kind == 0:
            if len(vs):
                hit = (vx >= hx0[i] - eps) & (vx <= hx1[i] + eps) & (vy0 <= y + eps) & (vy1 > y + eps) & (v_entry > y)
                for j in np.flatnonzero(hit):
                    v_entry[j] = y
                    heapq.heappush(heap, (y, 1, int(j)))
            # horizontals at the same height touching this one are already merged
        else:
            if done_v[i] or y > v_entry[i]:
                continue
            done_v[i] = True
            if len(hs):
                hit = ~h_reached & (hy >= y - eps) & (hy <= vy1[i] + eps) & (hx0 <= vx[i] + eps) & (hx1 >= vx[i] - eps)
                for j in np.flatnonzero(hit):
                    h_reached[j] = True
                    heapq.heappush(heap, (float(hy[j]), 0, int(j)))

    for k, p in enumerate(points):
        if abs(p.x) <= eps and abs(p.y) <= eps:
            continue
        on_h = len(hs) and np.any(h_reached & (np.abs(hy - p.y) <= eps) & (hx0 <= p.x + eps) & (hx1 >= p.x - eps))
        on_v = len(vs) and np.any((np.abs(vx - p.x) <= eps) & (v_entry <= p.y + eps) & (vy1 >= p.y - eps))
        if not (on_h or on_v):
            return ContinuousReport(False, k)
    return ContinuousReport(True)


# -- onRSA ----------------------------------------------------------------------


@dataclass(frozen=True)
class Emitted:
    """A segment with the height at which it was decided and how many points were known."""

    segment: Segment
    decided_at: float
    known: int


@dataclass
class PhaseRecord:
    index: int
    n_guess: int
    M_guess: float
    y_open: float
    origin_node: int
    stitch: float = 0.0
    requests: list[Replica] = field(default_factory=list)
    lineon: LineOn | None = None

    @property
    def step(self) -> float:
        return self.M_guess / self.n_guess

    def instance(self) -> Instance:
        return Instance(self.n_guess + 1, self.origin_node, tuple(self.requests))


@dataclass
class GuessState:
    n_guess: int = 4
    M_guess: float | None = None
    phase_index: int = 0
    phases: list[PhaseRecord] = field(default_factory=list)

    @property
    def phase_instances(self) -> list[Instance]:
        return [p.instance() for p in self.phases]


def _round_half_down(q: float) -> int:
    return math.ceil(q - 0.5 - _QEPS)


class _Phase:
    def __init__(self, rec: PhaseRecord, assert_level: str):
        self.rec = rec
        self.h = rec.step
        self.n = rec.n_guess + 1
        self.state = LineOn(self.n, rec.origin_node, assert_level=assert_level, log_events=True)
        rec.lineon = self.state
        self._seen = 0

    def x_of(self, v: int) -> float:
        return (v - 1) * self.h

    def y_of(self, t: int) -> float:
        return self.rec.y_open + t * self.h

    def node_of(self, x: float) -> int:
        return min(max(_round_half_down(x / self.h) + 1, 1), self.n)

    def time_of(self, y: float) -> int:
        return max(0, math.ceil((y - self.rec.y_open) / self.h - _QEPS))

    def _new_events(self) -> list[dict]:
        ev = self.state.events
        out = ev[self._seen :]
        self._seen = len(ev)
        return out

    def advance(self, tau: int, known: int) -> list[Emitted]:
        self.state.advance_to(tau)
        return self._realize_storage(known)

    def close(self, tau: int, known: int) -> list[Emitted]:
        """Advance a phase that is about to end up to step tau.

        Once only the root copy is left and no interval can become
        stay-active again, every further step stores just the root copy, so
        the rest of the way is one vertical piece.
        """
        st = self.state
        out: list[Emitted] = []
        while st.t < tau:
            if st.cache == [self.rec.origin_node] and not st._base_spans and not any(st._last_base):
                top = self.y_of(tau)
                s = vseg(self.x_of(self.rec.origin_node), self.y_of(st.t), top)
                out.append(Emitted(s, self.y_of(st.t), known))
                break
            st.advance_to(min(tau, st.t + 64))
            out.extend(self._realize_storage(known))
        return out

    def _realize_storage(self, known: int) -> list[Emitted]:
        out = []
        for ev in self._new_events():
            t = ev["t"]
            for e in ev["edges"]:
                s = vseg(self.x_of(e["node"]), self.y_of(t), self.y_of(t + 1))
                out.append(Emitted(s, self.y_of(t), known))
        return out

    def deliver(self, p: Point, known: int) -> list[Emitted]:
        tau = self.time_of(p.y)
        out = self.advance(tau, known - 1)
        v = self.node_of(p.x)
        before = _span_nodes(self.state._present)
        self.state.serve(Replica(v, tau))
        self.rec.requests.append(Replica(v, tau))
        top = self.y_of(tau)
        for ev in self._new_events():
            for e in ev["edges"]:
                out.append(Emitted(hseg(self.x_of(e["node"]), self.x_of(e["node"] + 1), p.y), p.y, known))
        for u in sorted(_span_nodes(self.state._present) - before):
            s = vseg(self.x_of(u), p.y, top)
            if s is not None:
                out.append(Emitted(s, p.y, known))
        s = hseg(self.x_of(v), p.x, p.y)
        if s is not None:
            out.append(Emitted(s, p.y, known))
        return out


def _span_nodes(spans: list[tuple[int, int]]) -> set[int]:
    return {v for lo, hi in spans for v in range(lo, hi + 1)}


@dataclass
class OnRSAResult:
    segments: list[Segment]
    cost: float
    feasible: bool
    emitted: list[Emitted]
    guess: GuessState
    first_unreachable: int | None = None

    def to_json(self) -> dict:
        return {
            "cost": self.cost,
            "feasible": self.feasible,
            "phases": len(self.guess.phases),
            "segments": [s.to_json() for s in self.segments],
        }


class OnRSA:
    """Incremental onRSA; feed points in non-decreasing y through :meth:`add`."""

    def __init__(self, assert_level: str = "cheap"):
        self.assert_level = assert_level
        self.guess = GuessState()
        self.points: list[Point] = []
        self.emitted: list[Emitted] = []
        self.root_top = 0.0  # the x = 0 column is live up to here before the first phase
        self.phase: _Phase | None = None

    def _emit(self, items: Iterable[Emitted]) -> None:
        self.emitted.extend(e for e in items if e.segment is not None)

    def add(self, p: Point) -> None:
        if self.points and p.y < self.points[-1].y:
            raise ValueError(f"point {p} arrives below the previous height {self.points[-1].y}")
        self.points.append(p)
        k = len(self.points)
        g = self.guess
        if self.phase is None:
            if p.x == 0:
                self._emit([Emitted(vseg(0.0, self.root_top, p.y), self.root_top, k - 1)])
                self.root_top = max(self.root_top, p.y)
                return
            self._emit([Emitted(vseg(0.0, self.root_top, p.y), self.root_top, k - 1)])
            self.root_top = p.y
            g.M_guess = 2 * p.x
            while g.n_guess < k:
                g.n_guess *= g.n_guess
            self._open(p, 0.0, k)
        elif k > g.n_guess or p.x > g.M_guess or self.phase.time_of(p.y) > PHASE_HEIGHT * g.n_guess:
            old = self.phase
            self._emit(old.close(old.time_of(p.y), k - 1))
            old.state.finish()
            while g.n_guess < k:
                g.n_guess *= g.n_guess
            while p.x > g.M_guess:
                g.M_guess *= 2
            self._open(p, old.x_of(old.rec.origin_node), k)
        if self.assert_level != "off" and (k > g.n_guess or p.x > g.M_guess):
            raise AssertionError(f"guess window violated at point {k - 1}")
        self._emit(self.phase.deliver(p, k))

    def _open(self, p: Point, x_src: float, k: int) -> None:
        g = self.guess
        h = g.M_guess / g.n_guess
        origin = min(max(_round_half_down(x_src / h) + 1, 1), g.n_guess + 1)
        rec = PhaseRecord(len(g.phases), g.n_guess, g.M_guess, p.y, origin)
        s = hseg(x_src, (origin - 1) * h, p.y)
        if s is not None:
            rec.stitch = s.length
            self._emit([Emitted(s, p.y, k)])
        g.phases.append(rec)
        g.phase_index = rec.index
        self.phase = _Phase(rec, self.assert_level)

    def finish(self) -> OnRSAResult:
        if self.phase is not None:
            self.phase.state.finish()
        segs = merge_segments(e.segment for e in self.emitted)
        rep = check_continuous(self.points, segs)
        cost = float(sum(s.length for s in segs))
        return OnRSAResult(segs, cost, rep.feasible, list(self.emitted), self.guess, rep.first_unreachable)


def run_onrsa(points: Sequence[Point], assert_level: str = "cheap") -> OnRSAResult:
    alg = OnRSA(assert_level)
    for p in points:
        alg.add(p)
    return alg.finish()


def audit_continuous_causality(points: Sequence[Point], emitted: Iterable[Emitted]) -> tuple[bool, str | None]:
    """Each segment lies at or above its decision height, which is at or above every point it knew."""
    coords = [c for p in points for c in (p.x, p.y)]
    for e in emitted:
        coords += [e.segment.x0, e.segment.y0, e.decided_at]
    eps = _eps(coords)
    for i, e in enumerate(emitted):
        if e.segment.y0 < e.decided_at - eps:
            return False, f"segment {i} starts at y={e.segment.y0} below its decision height {e.decided_at}"
        if e.known > 0 and points[e.known - 1].y > e.decided_at + eps:
            return False, f"segment {i} decided at {e.decided_at} uses point {e.known - 1} at y={points[e.known - 1].y}"
        if e.known > len(points):
            return False, f"segment {i} claims knowledge of {e.known} points"
    return True, None


def hanan_opt(points: Sequence[Point]) -> tuple[float, list[Segment]]:
    """Optimal cost by exact search on the grid spanned by the points' coordinates and 0."""
    if len(points) > MAX_HANAN_POINTS:
        raise InstanceTooLarge(f"{len(points)} points exceed the oracle limit {MAX_HANAN_POINTS}")
    xs = sorted({0.0, *(p.x for p in points)})
    ys = sorted({0.0, *(p.y for p in points)})
    xi = {x: i for i, x in enumerate(xs)}
    yi = {y: i for i, y in enumerate(ys)}
    terms = [(yi[p.y], xi[p.x]) for p in points]
    cost, moves = steiner_arborescence(xs, ys, (0, 0), terms)
    segs = []
    for kind, r, c in moves:
        if kind == "a":
            segs.append(Segment(Orientation.V, xs[c], ys[r], ys[r + 1] - ys[r]))
        else:
            segs.append(Segment(Orientation.H, xs[c], ys[r], xs[c + 1] - xs[c]))
    return cost, segs


# -- lineonp --------------------------------------------------------------------


def snap_to_grid(segments: Iterable[Segment], n: int, offset: int = 0, mirror: bool = False) -> set[GridEdge]:
    """Grid edges covering the image of the segments under (x, y) -> (node, floor(y)).

    node is the nearest integer column (ties to the lower one), placed at
    ``offset + column`` (or ``offset - column`` when mirrored) and clamped to
    [1, n].  The map is monotone in both coordinates, so connected
    y-monotone paths stay connected and integer points map to themselves.
    """

    def node(x: float) -> int:
        c = math.ceil(x - 0.5 - 1e-7)
        return min(max(offset - c if mirror else offset + c, 1), n)

    def time(y: float) -> int:
        return math.floor(y + 1e-7)

    out: set[GridEdge] = set()
    for s in segments:
        if s.orientation is Orientation.H:
            a, b = sorted((node(s.x0), node(s.x0 + s.length)))
            t = time(s.y0)
            out.update(hedge(v, t) for v in range(a, b))
        else:
            v = node(s.x0)
            out.update(arc(v, t) for t in range(time(s.y0), time(s.y0 + s.length)))
    return out


def repair(inst: Instance, edges: set[GridEdge]) -> tuple[set[GridEdge], int]:
    """Join every unreachable request by a shortest path from the reachable part."""
    edges = set(edges)
    added = 0
    while True:
        rep = check_solution(inst, edges, witnesses=True)
        if rep.feasible:
            return edges, added
        r = inst.requests[rep.first_unreachable]
        reach = {x for path in rep.witnesses.values() for x in path} | {inst.root}
        reach |= _reachable(inst, edges)
        u, s = min(
            (q for q in reach if q.time <= r.time),
            key=lambda q: (r.time - q.time + abs(q.node - r.node), q.node),
        )
        new = {arc(u, k) for k in range(s, r.time)}
        lo, hi = sorted((u, r.node))
        new |= {hedge(v, r.time) for v in range(lo, hi)}
        added += len(new - edges)
        edges |= new


def _reachable(inst: Instance, edges: set[GridEdge]) -> set[Replica]:
    adj: dict[Replica, list[Replica]] = {}
    for e in edges:
        a, b = e.endpoints()
        adj.setdefault(a, []).append(b)
        if e.kind is EdgeKind.H:
            adj.setdefault(b, []).append(a)
    seen = {inst.root}
    stack = [inst.root]
    while stack:
        x = stack.pop()
        for y in adj.get(x, ()):
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return seen


@dataclass
class LineonpResult:
    report: SolutionReport
    chosen: str
    cost: int
    cost_onrsa_route: int
    cost_lineon: int
    repair_edges: int
    onrsa_feasible: bool
    onrsa_cost: float


def run_lineonp(inst: Instance, assert_level: str = "cheap") -> LineonpResult:
    """Few-request MCD through onRSA, with plain lineon as the fallback."""
    o = inst.origin
    right = [Point(float(r.node - o), float(r.time)) for r in inst.requests if r.node >= o]
    left = [Point(float(o - r.node), float(r.time)) for r in inst.requests if r.node < o]
    edges: set[GridEdge] = set()
    cont_ok, cont_cost = True, 0.0
    for pts, mirror in ((right, False), (left, True)):
        if not pts:
            continue
        res = run_onrsa(pts, assert_level)
        cont_ok &= res.feasible
        cont_cost += res.cost
        edges |= snap_to_grid(res.segments, inst.n, o, mirror)
    edges, fixed = repair(inst, edges)
    state, lineon_report = run_lineon(inst, assert_level=assert_level)
    route_cost = len(edges)
    if route_cost <= state.cost:
        report = check_solution(inst, edges)
        chosen = "onrsa"
    else:
        report = lineon_report
        chosen = "lineon"
    return LineonpResult(report, chosen, report.total_cost, route_cost, state.cost, fixed, cont_ok, cont_cost)


# -- file formats ---------------------------------------------------------------


def load_points(path: str | Path) -> list[Point]:
    pts = []
    for i, line in enumerate(Path(path).read_text().splitlines()):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
            pts.append(Point(float(d["x"]), float(d["y"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"line {i + 1}: {exc}") from exc
    return pts


def save_points(points: Iterable[Point], path: str | Path) -> None:
    Path(path).write_text("".join(json.dumps(p.to_json()) + "\n" for p in points))


def segments_to_json(segments: Iterable[Segment]) -> list[dict]:
    return [s.to_json() for s in segments]
