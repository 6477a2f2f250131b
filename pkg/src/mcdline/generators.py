"""Seeded instance and point-stream generators for the benchmarks."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .grid import Instance, Replica
from .srsa import Point

FAMILIES = ("uniform", "clustered", "staircase", "cascade")
_ALIASES = {"binarycascade": "cascade", "binary_cascade": "cascade", "binary-cascade": "cascade"}


class GenSpecError(ValueError):
    pass


def family_name(name: str) -> str:
    key = name.lower()
    key = _ALIASES.get(key, key)
    if key not in FAMILIES:
        raise GenSpecError(f"unknown family {name!r}; choose from {', '.join(FAMILIES)}")
    return key


@dataclass(frozen=True)
class GenSpec:
    family: str
    n: int
    N: int
    t_max: int
    seed: int = 0
    origin: int | None = None  # drawn from the seed when omitted
    clusters: int = 3
    cluster_width: int | None = None  # default max(1, n // 32)
    alpha: float = 0.5  # staircase drift is round(n ** alpha) per step
    depth: int | None = None  # cascade depth; yields 2**depth requests
    scale: float = 1.0  # multiplies both coordinates of generated points

    def __post_init__(self):
        object.__setattr__(self, "family", family_name(self.family))
        if self.n < 2:
            raise GenSpecError("n must be at least 2")
        if self.N < 0 or self.t_max < 0:
            raise GenSpecError("N and t_max must be non-negative")
        if self.origin is not None and not 1 <= self.origin <= self.n:
            raise GenSpecError(f"origin {self.origin} outside [1, {self.n}]")
        if self.scale <= 0:
            raise GenSpecError("scale must be positive")
        if not 0 <= self.seed < 2**64:
            raise GenSpecError("seed must fit in 64 bits")

    def to_json(self) -> dict:
        return asdict(self)

    def with_seed(self, seed: int) -> "GenSpec":
        return replace(self, seed=seed)


def _rng(spec: GenSpec) -> np.random.Generator:
    return np.random.default_rng(spec.seed)


def _sorted_times(rng: np.random.Generator, N: int, t_max: int) -> np.ndarray:
    return np.sort(rng.integers(0, t_max + 1, N), kind="stable")


def cascade_requests(n: int, depth: int, rng: np.random.Generator) -> list[Replica]:
    """Recursive halving: one request per segment per level, alternating halves.

    Level k has 2**k segments and its requests are 2**(depth-1-k) steps apart,
    so coarse levels are slow and fine levels fast.  Total 2**depth requests.
    """
    flip = int(rng.integers(0, 2))
    reqs = [Replica(n // 2 + 1 if n > 1 else 1, 0)]
    t = 1
    for k in range(depth):
        gap = 1 << (depth - 1 - k)
        segs = 1 << k
        for j in range(segs):
            lo = j * n // segs + 1
            hi = (j + 1) * n // segs
            mid = (lo + hi) // 2
            if (j + k + flip) % 2 == 0:
                node = (lo + mid) // 2
            else:
                node = (mid + 1 + hi) // 2
            reqs.append(Replica(min(max(node, 1), n), t))
            t += gap
    return reqs


def default_depth(spec: GenSpec) -> int:
    if spec.depth is not None:
        return spec.depth
    want = max(1, math.ceil(math.log2(max(spec.N, 2))))
    return min(want, max(1, int(math.log2(spec.n))))


def generate(spec: GenSpec) -> Instance:
    rng = _rng(spec)
    n, N = spec.n, spec.N
    origin = spec.origin if spec.origin is not None else int(rng.integers(1, n + 1))
    fam = spec.family
    if fam == "uniform":
        nodes = rng.integers(1, n + 1, N)
        times = _sorted_times(rng, N, spec.t_max)
    elif fam == "clustered":
        width = spec.cluster_width or max(1, n // 32)
        centers = rng.integers(1, n + 1, max(1, spec.clusters))
        pick = rng.integers(0, len(centers), N)
        nodes = np.clip(centers[pick] + rng.integers(-width, width + 1, N), 1, n)
        times = _sorted_times(rng, N, spec.t_max)
    elif fam == "staircase":
        step = max(1, round(n**spec.alpha))
        nodes = np.empty(N, dtype=np.int64)
        v = int(rng.integers(1, n + 1))
        for i in range(N):
            nodes[i] = v
            v += step if rng.random() < 0.5 else -step
            if v < 1 or v > n:  # reflect off the ends
                v = int(np.clip(2 * (1 if v < 1 else n) - v, 1, n))
        span = max(N - 1, 1)
        times = np.array([round(i * spec.t_max / span) for i in range(N)], dtype=np.int64)
    else:
        reqs = cascade_requests(n, default_depth(spec), rng)
        return Instance(n, origin, tuple(reqs))
    return Instance(n, origin, tuple(Replica(int(v), int(t)) for v, t in zip(nodes, times)))


def generate_points(spec: GenSpec) -> list[Point]:
    """Continuous analogue: x in [0, n], y in [0, t_max], both times ``scale``."""
    rng = _rng(spec)
    fam = spec.family
    if fam == "uniform":
        xs = rng.uniform(0, spec.n, spec.N)
        ys = np.sort(rng.uniform(0, spec.t_max, spec.N))
    elif fam == "clustered":
        width = spec.cluster_width or max(1, spec.n // 32)
        centers = rng.uniform(0, spec.n, max(1, spec.clusters))
        pick = rng.integers(0, len(centers), spec.N)
        xs = np.clip(centers[pick] + rng.uniform(-width, width, spec.N), 0, spec.n)
        ys = np.sort(rng.uniform(0, spec.t_max, spec.N))
    else:
        inst = generate(replace(spec, origin=1))
        k = len(inst.requests)
        xs = np.array([r.node - 1 for r in inst.requests], dtype=float) + rng.uniform(0, 1, k)
        ys = np.sort(np.array([r.time for r in inst.requests], dtype=float) + rng.uniform(0, 1, k))
    return [Point(float(x) * spec.scale, float(y) * spec.scale) for x, y in zip(xs, ys)]
