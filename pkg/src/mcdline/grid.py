"""The network x time grid: replicas, edges, distances and the interval hierarchy.

Nodes are 1-based, times 0-based.  A horizontal edge is stored by its left
endpoint, an arc by its lower endpoint.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple

INF = math.inf


class Replica(NamedTuple):
    node: int
    time: int


class EdgeKind(str, Enum):
    H = "h"
    A = "a"


class GridEdge(NamedTuple):
    kind: EdgeKind
    node: int
    time: int

    @property
    def anchor(self) -> Replica:
        return Replica(self.node, self.time)

    @property
    def head(self) -> Replica:
        if self.kind is EdgeKind.H:
            return Replica(self.node + 1, self.time)
        return Replica(self.node, self.time + 1)

    def endpoints(self) -> tuple[Replica, Replica]:
        return self.anchor, self.head

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "node": self.node, "time": self.time}

    @classmethod
    def from_json(cls, d: dict) -> "GridEdge":
        return cls(EdgeKind(d["kind"]), int(d["node"]), int(d["time"]))


def hedge(node: int, time: int) -> GridEdge:
    return GridEdge(EdgeKind.H, node, time)


def arc(node: int, time: int) -> GridEdge:
    return GridEdge(EdgeKind.A, node, time)


class InvalidInstance(ValueError):
    pass


@dataclass(frozen=True)
class Instance:
    n: int
    origin: int
    requests: tuple[Replica, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "requests", tuple(Replica(int(v), int(t)) for v, t in self.requests))
        if self.n < 1:
            raise InvalidInstance(f"line size must be positive, got {self.n}")
        if not 1 <= self.origin <= self.n:
            raise InvalidInstance(f"origin {self.origin} outside [1, {self.n}]")
        prev = 0
        for i, (v, t) in enumerate(self.requests):
            if not 1 <= v <= self.n:
                raise InvalidInstance(f"request {i} node {v} outside [1, {self.n}]")
            if t < 0:
                raise InvalidInstance(f"request {i} has negative time {t}")
            if t < prev:
                raise InvalidInstance(f"request {i} breaks time order ({t} < {prev})")
            prev = t

    @property
    def root(self) -> Replica:
        return Replica(self.origin, 0)

    @property
    def t_max(self) -> int:
        """Time of the last request (0 for an empty instance)."""
        return self.requests[-1].time if self.requests else 0

    def __len__(self) -> int:
        return len(self.requests)

    def to_json(self) -> dict:
        return {"n": self.n, "origin": self.origin, "requests": [[v, t] for v, t in self.requests]}

    @classmethod
    def from_json(cls, d: dict) -> "Instance":
        try:
            reqs = [(int(v), int(t)) for v, t in d.get("requests", [])]
            # stable sort: ties keep file order
            reqs.sort(key=lambda r: r[1])
            return cls(int(d["n"]), int(d["origin"]), tuple(reqs))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidInstance):
                raise
            raise InvalidInstance(f"malformed instance: {exc}") from exc

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json()) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Instance":
        return cls.from_json(json.loads(Path(path).read_text()))


def distance(a: Replica, b: Replica) -> float:
    """Directed grid distance: time gap plus node gap, infinite when b is earlier."""
    if a.time > b.time:
        return INF
    return (b.time - a.time) + abs(b.node - a.node)


def horizontal_path(a: Replica, b: Replica) -> list[GridEdge]:
    if a.time != b.time:
        raise ValueError(f"horizontal path needs equal times, got {a} and {b}")
    lo, hi = sorted((a.node, b.node))
    return [hedge(v, a.time) for v in range(lo, hi)]


def vertical_path(a: Replica, b: Replica) -> list[GridEdge]:
    if a.node != b.node:
        raise ValueError(f"vertical path needs equal nodes, got {a} and {b}")
    if a.time > b.time:
        raise ValueError(f"vertical path runs backwards in time: {a} -> {b}")
    return [arc(a.node, t) for t in range(a.time, b.time)]


def padded_size(n: int, delta: int) -> int:
    """Smallest delta * 2^k covering n nodes."""
    blocks = -(-n // delta)
    return delta * (1 << max(0, (blocks - 1).bit_length()))


def auto_delta(n: int) -> tuple[int, int]:
    """Granularity round(sqrt(10 log2 n)) and the padded size it induces.

    The padded size feeds back into the log, so iterate to a fixed point
    (two rounds suffice in practice; a third is allowed before giving up).
    """
    size = n
    delta = 1
    for _ in range(3):
        delta = max(1, round(math.sqrt(10 * math.log2(size)))) if size > 1 else 1
        padded = padded_size(n, delta)
        if padded == size:
            break
        size = padded
    return delta, padded_size(n, delta)


@dataclass(frozen=True)
class Interval:
    level: int
    index: int
    delta: int
    padded_n: int

    def __post_init__(self):
        if not 0 <= self.level <= num_levels(self.padded_n, self.delta) - 1:
            raise ValueError(f"level {self.level} out of range")
        if not 1 <= self.index <= self.padded_n // self.size:
            raise ValueError(f"index {self.index} out of range at level {self.level}")

    @property
    def size(self) -> int:
        return self.delta << self.level

    @property
    def lo(self) -> int:
        return (self.index - 1) * self.size + 1

    @property
    def hi(self) -> int:
        return self.index * self.size

    @property
    def nodes(self) -> range:
        return range(self.lo, self.hi + 1)

    @property
    def count(self) -> int:
        """Number of intervals on this level."""
        return self.padded_n // self.size

    def __contains__(self, v: int) -> bool:
        return self.lo <= v <= self.hi


def num_levels(padded_n: int, delta: int) -> int:
    m = padded_n // delta
    if m * delta != padded_n or m & (m - 1):
        raise ValueError(f"padded size {padded_n} is not delta * 2^k for delta={delta}")
    return m.bit_length()


def interval_of(v: int, level: int, delta: int, padded_n: int) -> Interval:
    if not 1 <= v <= padded_n:
        raise ValueError(f"node {v} outside [1, {padded_n}]")
    if not 0 <= level < num_levels(padded_n, delta):
        raise ValueError(f"level {level} out of range")
    # (v-1) rather than v: keeps multiples of the interval size in the interval they end
    return Interval(level, (v - 1) // (delta << level) + 1, delta, padded_n)


def neighborhood(interval: Interval) -> tuple[int, int]:
    """Inclusive node range of the interval and its same-level neighbors."""
    lo = max(1, interval.lo - interval.size)
    hi = min(interval.padded_n, interval.hi + interval.size)
    return lo, hi


def _window_hit(interval: Interval, t: int, base: Iterable[Replica], width: int) -> bool:
    start = max(0, t - width)
    return any(r.node in interval and start <= r.time <= t for r in base)


def is_active(interval: Interval, t: int, base: Iterable[Replica]) -> bool:
    return _window_hit(interval, t, base, 1 << interval.level)


def is_stay_active(interval: Interval, t: int, base: Iterable[Replica]) -> bool:
    return _window_hit(interval, t, base, (1 << interval.level) - 1)


@dataclass(frozen=True)
class Rectangle:
    """All replicas of nodes lo..hi over times t_start..t_end."""

    lo: int
    hi: int
    t_start: int
    t_end: int

    def __post_init__(self):
        if self.lo > self.hi or self.t_start > self.t_end:
            raise ValueError("empty rectangle")

    @classmethod
    def over(cls, interval: Interval, t_start: int, t_end: int) -> "Rectangle":
        return cls(interval.lo, interval.hi, t_start, t_end)

    def replicas(self) -> Iterator[Replica]:
        for t in range(self.t_start, self.t_end + 1):
            for v in range(self.lo, self.hi + 1):
                yield Replica(v, t)

    def __contains__(self, item) -> bool:
        if isinstance(item, GridEdge):
            return all(r in self for r in item.endpoints())
        v, t = item
        return self.lo <= v <= self.hi and self.t_start <= t <= self.t_end

    def edges(self) -> Iterator[GridEdge]:
        for t in range(self.t_start, self.t_end + 1):
            for v in range(self.lo, self.hi):
                yield hedge(v, t)
        for t in range(self.t_start, self.t_end):
            for v in range(self.lo, self.hi + 1):
                yield arc(v, t)
