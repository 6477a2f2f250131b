import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from mcdline.grid import EdgeKind, Instance, Replica, arc, hedge, neighborhood
from mcdline.offline import check_solution, run_triangle
from mcdline.online_mcd import (
    InvariantViolation,
    LineOn,
    audit_causality,
    bound_rhs,
    competitive_report,
    lineon_events,
    run_lineon,
    safe_ratio,
    triangle_as_online_log,
)
from strategies import instances, random_instance

R = Replica


def logged(inst, **kw):
    state = LineOn(inst.n, inst.origin, log_events=True, **kw)
    for r in inst.requests:
        state.serve(r)
    state.advance_to(inst.t_max)
    state.finish()
    return state


def test_request_on_origin_costs_nothing():
    state, rep = run_lineon(Instance(8, 1, (R(1, 0),)))
    assert rep.feasible and state.cost == 0 and state.commits == []


def test_single_far_request_hand_trace():
    # delta 6, padded 12: only the root copy survives t = 0, 1; at t = 2 the
    # request is 3 away from node 1 and the base spans the whole line
    state, rep = run_lineon(Instance(8, 1, (R(4, 2),)))
    assert (state.delta, state.padded_n) == (6, 12)
    assert state.r_on == [3] and 3 <= (4 * 6 + 1) * 5
    assert state.a_edges == {arc(1, 0), arc(1, 1)}
    assert state.h_edges == {hedge(v, 2) for v in range(1, 8)}
    assert state.cost == 9 and rep.feasible


def test_idle_steps_keep_only_the_root_copy():
    state = LineOn(16, 5, delta=2)
    state.advance_to(4)
    assert state.cache == [5] and state.commits == []
    assert state.a_edges == {arc(5, t) for t in range(4)}


def test_fresh_base_forces_one_level_zero_commit():
    # delta 2 on 16 nodes; a request at node 13 at time 0 is far from the root
    state = LineOn(16, 1, delta=2, assert_level="full")
    state.serve(R(13, 0))
    commits = state.store()
    level0 = [c for c in commits if c.level == 0]
    assert level0, "the level-0 interval holding the base must commit"
    for c in commits:
        lo, hi = neighborhood(c.interval(state.delta, state.padded_n))
        assert lo <= c.node <= hi
    # one stored copy serves every nested interval whose neighborhood contains it
    assert len({c.node for c in commits}) == len(commits)
    covered = [c for c in commits if c.level > 0]
    for c in covered:
        lo, hi = neighborhood(c.interval(state.delta, state.padded_n))
        assert not any(lo <= d.node <= hi for d in commits if d.level < c.level)


def test_storage_keeps_origin_and_only_known_nodes():
    rng = random.Random(7)
    for _ in range(40):
        inst = random_instance(rng, 40, 8, 30, n_min=2)
        state, _ = run_lineon(inst, assert_level="full")
        base_by_time = {}
        for s in state.triangle.steps:
            base_by_time.setdefault(s.request.time, set()).update(range(s.base_lo, s.base_hi + 1))
        for t, cache in state.history.items():
            assert inst.origin in cache
            if t > 0:
                prev = set(state.history[t - 1]) | base_by_time.get(t - 1, set())
                assert set(cache) <= prev


def test_corrupted_ledger_trips_observation_three():
    state = LineOn(32, 1, delta=2)
    state.serve(R(30, 0))
    state.advance_to(3)
    state.commits.clear()
    with pytest.raises(InvariantViolation) as err:
        state.finish()
    assert err.value.name == "observation 3"


def test_requests_must_not_go_back_in_time():
    state = LineOn(8, 1)
    state.serve(R(2, 3))
    with pytest.raises(ValueError):
        state.serve(R(2, 1))
    with pytest.raises(ValueError):
        state.serve(R(9, 4))
    with pytest.raises(ValueError):
        LineOn(8, 1, assert_level="loud")


def test_causality_audit_and_negative_control():
    inst = Instance(8, 1, (R(4, 2), R(7, 3)))
    state = logged(inst)
    assert audit_causality(lineon_events(state)) == (True, None)
    ok, msg = audit_causality(triangle_as_online_log(inst))
    assert not ok and "retroactive arc (1,0)" in msg
    assert audit_causality(lineon_events(logged(Instance(4, 1)))) == (True, None)


def test_audit_rejects_doctored_logs():
    inst = Instance(8, 1, (R(4, 2),))
    ev = lineon_events(logged(inst))
    bad = json.loads(json.dumps(ev))
    bad[-1]["edges"].append({"kind": "a", "node": 4, "time": 2})
    assert not audit_causality(bad)[0]
    bad = json.loads(json.dumps(ev))
    bad[1]["edges"] = [{"kind": "a", "node": 5, "time": 0}]  # no copy at node 5
    assert not audit_causality(bad)[0]
    bad = json.loads(json.dumps(ev))
    bad[2], bad[1] = bad[1], bad[2]
    assert not audit_causality(bad)[0]


def test_trace_file(tmp_path):
    state = logged(Instance(8, 1, (R(4, 2),)))
    state.write_trace(tmp_path / "trace.jsonl")
    lines = [json.loads(x) for x in (tmp_path / "trace.jsonl").read_text().splitlines()]
    assert [e["phase"] for e in lines] == ["store", "store", "deliver"]
    assert lines[-1]["r_on"] == 3 and lines[-1]["rho"] == 5


@given(instances(n_max=48, N_max=8, t_max=40, n_min=2))
@settings(max_examples=120)
def test_full_assertions_hold(inst):
    state, rep = run_lineon(inst, assert_level="full")
    assert rep.feasible
    assert state.cost == len(state.edges)
    off_root = sum(1 for e in state.a_edges if not (e.node == inst.origin and e.time < state.t))
    assert off_root <= len(state.commits)
    assert state.obs3_equal == (off_root == len(state.commits))
    for r, rho in zip(state.r_on, (s.radius for s in state.triangle.steps)):
        assert r <= (4 * state.delta + 1) * rho


@given(instances(n_max=64, N_max=10, t_max=80, n_min=2), st.sampled_from([None, 1, 2, 3, 5]))
@settings(max_examples=100)
def test_fast_forward_is_exact(inst, delta):
    a = logged(inst, delta=delta, fast_forward=True)
    b = logged(inst, delta=delta, fast_forward=False)
    assert a.edges == b.edges and a.commits == b.commits
    assert audit_causality(lineon_events(a))[0]


@given(instances(n_max=32, N_max=6, t_max=20, n_min=2))
@settings(max_examples=60)
def test_online_arcs_never_precede_their_decision(inst):
    state = logged(inst)
    ok, msg = audit_causality(lineon_events(state))
    assert ok, msg


def test_competitive_report_fields():
    row = competitive_report(Instance(8, 1, (R(4, 2),)))
    assert row["cost_exact"] == 5 and row["cost_triangle"] == 9 and row["cost_lineon"] == 9
    assert row["ratio_vs_triangle"] == 1.0 and row["bound_satisfied"]
    assert row["bound_rhs"] == bound_rhs(12)
    root_only = competitive_report(Instance(8, 3, (R(3, 4),)))
    assert root_only["ratio_vs_triangle"] == 1.0
    big = competitive_report(Instance(4096, 1, (R(4000, 3),)), with_exact=True)
    assert big["cost_exact"] is None and big["feasible"]


def test_safe_ratio():
    assert safe_ratio(0, 0) == 1.0
    assert safe_ratio(3, 0) == float("inf")
    assert safe_ratio(3, 2) == 1.5


def test_fixed_delta_and_output_feasible_with_delta_one():
    inst = Instance(20, 10, (R(1, 1), R(20, 2), R(10, 9)))
    state, rep = run_lineon(inst, delta=1, assert_level="full")
    assert rep.feasible and state.delta == 1
    assert check_solution(inst, run_triangle(inst).edges).feasible
    assert all(e.kind in (EdgeKind.H, EdgeKind.A) for e in state.edges)
