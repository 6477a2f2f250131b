import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mcdline.generators import FAMILIES, GenSpec, GenSpecError, cascade_requests, generate, generate_points
from mcdline.grid import Instance
from mcdline.srsa import run_onrsa


def test_determinism():
    for fam in FAMILIES:
        spec = GenSpec(fam, 64, 20, 50, seed=9)
        assert generate(spec) == generate(spec)
        assert generate_points(spec) == generate_points(spec)
    assert generate(GenSpec("uniform", 64, 20, 50, seed=1)) != generate(GenSpec("uniform", 64, 20, 50, seed=2))


def test_empty_request_list():
    inst = generate(GenSpec("uniform", 16, 0, 10, seed=3))
    assert inst.requests == ()


@pytest.mark.parametrize("d", [1, 2, 3, 5, 8])
def test_cascade_count_and_distinct_times(d):
    inst = generate(GenSpec("BinaryCascade", 1 << d, 0, 0, seed=4, depth=d))
    assert len(inst.requests) == 1 << d
    times = [r.time for r in inst.requests]
    assert len(set(times)) == len(times)


def test_cascade_alternates_halves():
    reqs = cascade_requests(16, 3, np.random.default_rng(0))
    level2 = reqs[3:7]  # four segments of size 4
    sides = [(r.node - 1) % 4 < 2 for r in level2]
    assert all(a != b for a, b in zip(sides, sides[1:]))


def test_staircase_drift():
    inst = generate(GenSpec("staircase", 256, 30, 60, seed=2, alpha=0.5))
    steps = [abs(a.node - b.node) for a, b in zip(inst.requests, inst.requests[1:])]
    # every step moves by n**alpha except where the walk bounces off an end
    assert sum(s == 16 for s in steps) >= len(steps) - 4
    times = [r.time for r in inst.requests]
    assert times[0] == 0 and times[-1] == 60


def test_family_aliases_and_bad_specs():
    assert GenSpec("binary_cascade", 8, 1, 1).family == "cascade"
    for kw in [dict(family="zigzag"), dict(n=1), dict(N=-1), dict(t_max=-2), dict(origin=99), dict(scale=0),
               dict(seed=-1)]:
        args = dict(family="uniform", n=8, N=2, t_max=3)
        args.update(kw)
        with pytest.raises(GenSpecError):
            GenSpec(**args)


def test_single_point_stream():
    pts = generate_points(GenSpec("uniform", 10, 1, 0, seed=5))
    assert len(pts) == 1 and pts[0].y == 0


def test_scaled_stream_scales_onrsa_cost():
    base = GenSpec("uniform", 50, 12, 40, seed=6)
    a = run_onrsa(generate_points(base)).cost
    b = run_onrsa(generate_points(GenSpec("uniform", 50, 12, 40, seed=6, scale=10.0))).cost
    assert b == pytest.approx(10 * a, rel=1e-9)


@given(st.sampled_from(FAMILIES), st.integers(2, 300), st.integers(0, 40), st.integers(0, 200), st.integers(0, 2**64 - 1))
@settings(max_examples=200)
def test_generated_inputs_are_valid(fam, n, N, t_max, seed):
    spec = GenSpec(fam, n, N, t_max, seed=seed)
    inst = generate(spec)
    assert isinstance(inst, Instance) and inst.n == n
    assert all(a.time <= b.time for a, b in zip(inst.requests, inst.requests[1:]))
    pts = generate_points(spec)
    assert all(a.y <= b.y for a, b in zip(pts, pts[1:]))
    assert all(p.x >= 0 and p.y >= 0 for p in pts)
