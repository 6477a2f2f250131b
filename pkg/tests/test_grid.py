import math

import pytest
from hypothesis import given, strategies as st

from mcdline.grid import (
    INF,
    EdgeKind,
    GridEdge,
    Instance,
    Interval,
    InvalidInstance,
    Rectangle,
    Replica,
    arc,
    auto_delta,
    distance,
    hedge,
    horizontal_path,
    interval_of,
    is_active,
    is_stay_active,
    neighborhood,
    num_levels,
    padded_size,
    vertical_path,
)

R = Replica


def test_distance_examples():
    assert distance(R(2, 1), R(5, 4)) == 6
    assert distance(R(5, 4), R(5, 4)) == 0
    assert distance(R(5, 4), R(2, 1)) == INF
    assert math.isinf(distance(R(5, 4), R(2, 1)))


def test_paths():
    assert horizontal_path(R(2, 3), R(5, 3)) == [hedge(2, 3), hedge(3, 3), hedge(4, 3)]
    assert horizontal_path(R(5, 3), R(2, 3)) == horizontal_path(R(2, 3), R(5, 3))
    assert horizontal_path(R(4, 0), R(4, 0)) == []
    assert vertical_path(R(3, 1), R(3, 4)) == [arc(3, 1), arc(3, 2), arc(3, 3)]
    assert vertical_path(R(3, 4), R(3, 4)) == []
    with pytest.raises(ValueError):
        vertical_path(R(3, 4), R(3, 1))
    with pytest.raises(ValueError):
        horizontal_path(R(1, 0), R(2, 1))


def test_edge_heads_and_json():
    assert hedge(3, 2).head == R(4, 2)
    assert arc(3, 2).head == R(3, 3)
    assert arc(3, 2).endpoints() == (R(3, 2), R(3, 3))
    e = GridEdge.from_json({"kind": "h", "node": 5, "time": 1})
    assert e == hedge(5, 1) and e.kind is EdgeKind.H
    assert GridEdge.from_json(arc(2, 7).to_json()) == arc(2, 7)


# node 69 on a 96-node line with delta 6: one interval per level
@pytest.mark.parametrize("level,index", [(0, 12), (1, 6), (2, 3), (3, 2), (4, 1)])
def test_interval_of_node_69(level, index):
    assert interval_of(69, level, 6, 96).index == index


def test_interval_edges_of_the_line():
    assert interval_of(1, 0, 6, 96).index == 1
    assert interval_of(96, 4, 6, 96).index == 1
    assert num_levels(96, 6) == 5
    # a multiple of the interval size stays in the interval it closes
    assert interval_of(6, 0, 6, 96).index == 1
    assert interval_of(12, 1, 6, 96).index == 1


def test_neighborhood_examples():
    assert neighborhood(Interval(1, 6, 6, 96)) == (49, 84)
    first = Interval(0, 1, 6, 96)
    assert neighborhood(first) == (1, 12)
    assert neighborhood(Interval(4, 1, 6, 96)) == (1, 96)


def test_interval_rejects_bad_coordinates():
    with pytest.raises(ValueError):
        Interval(5, 1, 6, 96)
    with pytest.raises(ValueError):
        Interval(0, 17, 6, 96)
    with pytest.raises(ValueError):
        num_levels(100, 6)


def test_activity_windows():
    I = Interval(3, 1, 2, 16)  # level 3, window 8
    base = {R(3, 2)}
    assert is_active(I, 10, base) and not is_stay_active(I, 10, base)
    assert is_active(I, 2, base) and is_stay_active(I, 2, base)
    assert not is_active(I, 11, base)
    assert not is_active(I, 5, set())
    # windows are clipped at time zero
    assert is_stay_active(Interval(3, 1, 2, 16), 0, {R(1, 0)})


def test_padding_and_auto_delta():
    assert padded_size(96, 6) == 96
    assert padded_size(100, 6) == 192
    assert padded_size(1, 1) == 1
    for n in [2, 8, 64, 1000, 4096, 1 << 16, 1 << 20]:
        delta, padded = auto_delta(n)
        assert padded >= n and padded % delta == 0
        m = padded // delta
        assert m & (m - 1) == 0
        assert delta == max(1, round(math.sqrt(10 * math.log2(padded))))


def test_instance_validation_and_json(tmp_path):
    inst = Instance(8, 2, ((3, 0), (1, 4)))
    assert inst.root == R(2, 0) and inst.t_max == 4 and len(inst) == 2
    path = tmp_path / "i.json"
    inst.save(path)
    assert Instance.load(path) == inst
    # ties keep file order, times get sorted
    d = {"n": 5, "origin": 1, "requests": [[4, 2], [2, 1], [3, 1]]}
    assert Instance.from_json(d).requests == (R(2, 1), R(3, 1), R(4, 2))
    assert Instance(4, 1).t_max == 0
    for bad in [dict(n=0, origin=1), dict(n=4, origin=5), dict(n=4, origin=1, requests=((5, 0),)),
                dict(n=4, origin=1, requests=((1, -1),)), dict(n=4, origin=1, requests=((1, 3), (2, 1)))]:
        with pytest.raises(InvalidInstance):
            Instance(**bad)
    with pytest.raises(InvalidInstance):
        Instance.from_json({"origin": 1})


def test_rectangle():
    rect = Rectangle(2, 4, 1, 3)
    reps = set(rect.replicas())
    assert len(reps) == 9 and R(2, 1) in rect and R(5, 1) not in rect
    assert hedge(2, 1) in rect and hedge(4, 1) not in rect and arc(4, 3) not in rect
    assert len(list(rect.edges())) == 2 * 3 + 3 * 2
    assert Rectangle.over(Interval(0, 2, 3, 12), 0, 1) == Rectangle(4, 6, 0, 1)
    with pytest.raises(ValueError):
        Rectangle(3, 2, 0, 0)


deltas = st.integers(1, 7)
exps = st.integers(0, 5)


@given(deltas, exps, st.data())
def test_levels_partition_the_line(delta, k, data):
    padded = delta << k
    level = data.draw(st.integers(0, k))
    covered = []
    for idx in range(1, padded // (delta << level) + 1):
        covered.extend(Interval(level, idx, delta, padded).nodes)
    assert covered == list(range(1, padded + 1))
    v = data.draw(st.integers(1, padded))
    assert v in interval_of(v, level, delta, padded)


@given(deltas, exps, st.data())
def test_levels_nest(delta, k, data):
    padded = delta << k
    v = data.draw(st.integers(1, padded))
    for lo_level in range(k + 1):
        for hi_level in range(lo_level, k + 1):
            a = interval_of(v, lo_level, delta, padded)
            b = interval_of(v, hi_level, delta, padded)
            assert set(a.nodes) <= set(b.nodes)
            na, nb = neighborhood(a), neighborhood(b)
            assert nb[0] <= na[0] and na[1] <= nb[1]


replicas = st.builds(Replica, st.integers(1, 30), st.integers(0, 30))


@given(replicas, replicas, replicas)
def test_distance_triangle_inequality(a, b, c):
    a, b, c = sorted((a, b, c), key=lambda r: r.time)
    assert distance(a, c) <= distance(a, b) + distance(b, c)


@given(replicas, st.integers(0, 30))
def test_path_lengths(a, dt):
    b = Replica(a.node, a.time + dt)
    assert len(vertical_path(a, b)) == distance(a, b)
    c = Replica(dt + 1, a.time)
    assert len(horizontal_path(a, c)) == abs(a.node - c.node)


@given(deltas, exps, st.data())
def test_stay_active_implies_active(delta, k, data):
    padded = delta << k
    level = data.draw(st.integers(0, k))
    idx = data.draw(st.integers(1, padded // (delta << level)))
    I = Interval(level, idx, delta, padded)
    base = data.draw(st.sets(replicas.filter(lambda r: r.node <= padded), max_size=6))
    t = data.draw(st.integers(0, 40))
    if is_stay_active(I, t, base):
        assert is_active(I, t, base)
