from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from beliefplan.domains import gen_bt, gen_btc, gen_cbtc, gen_ring
from beliefplan.graphs import INF, build_lug, build_mg
from beliefplan.heuristic import (
    ALL_SPECS,
    Agg,
    Heuristic,
    Kind,
    SpecError,
    Substrate,
    lug_relaxed_plan,
    merge_plans,
    mg_relaxed_plans,
    parse_spec,
)
from beliefplan.search import bfs_oracle

from support import random_reachable_beliefs

CBTC = gen_cbtc()


def value(problem, text, bs_p=None, bs_i=None, direction="regress"):
    h = Heuristic(problem, parse_spec(text, direction=direction))
    return h.estimate(problem.init if bs_p is None else bs_p, problem.goal if bs_i is None else bs_i)


@pytest.mark.parametrize("text", ALL_SPECS + ["lug:level:fx-ix", "mg:rp:sum:dyx", "lug:max:sum"])
def test_valid_specs_round_trip(text):
    spec = parse_spec(text)
    assert parse_spec(str(spec)) == spec


@pytest.mark.parametrize("text", [
    "sg:rp:sum", "sg1:max:max", "lug:rp:max", "mg:rpu:sum", "mg:rp:fx-ix",
    "lug:rpu", "card:max", "nope", "mg", "lug:rp:max:sum", "zero:rp", "",
])
def test_invalid_specs_are_rejected(text):
    with pytest.raises(SpecError):
        parse_spec(text)


def test_spec_defaults():
    assert parse_spec("mg:rp").agg == Agg.MAX
    assert parse_spec("lug:level").agg == Agg.MAX
    assert parse_spec("mg:rpu").kind == Kind.RP_UNION
    assert parse_spec("sg1:rp").substrate == Substrate.SG_SAMPLE
    with pytest.raises(SpecError):
        parse_spec("lug:rp", fraction=0)


def test_cbtc_snapshot_values():
    expected = {
        "card": 4, "sg:rp": 2, "mg:rp:max": 2, "mg:rp:sum": 4, "mg:rpu": 3,
        "lug:rp": 3, "lug:level": 2, "lug:level:fx": 3,
    }
    got = {k: value(CBTC, k) for k in expected}
    assert got == expected


def test_union_of_layered_plans():
    a = [{"a1", "a2"}, {"a5"}, {"a6", "a7"}]
    b = [{"a1", "a7"}, {"a3"}]
    merged = merge_plans([a, b], "start")
    assert merged == [{"a1", "a2", "a7"}, {"a5", "a3"}, {"a6", "a7"}]
    assert sum(map(len, merged)) == 7
    assert merge_plans([a, b], "end") == [{"a1", "a2"}, {"a5", "a1", "a7"}, {"a6", "a7", "a3"}]
    assert merge_plans([], "start") == []


def test_cbtc_relaxed_plans():
    lug = build_lug(CBTC.init, CBTC)
    rp = lug_relaxed_plan(lug, CBTC.goal)
    assert rp.b == 2 and rp.value == 3
    names = rp.names(CBTC)
    assert names[1] == ["DunkP1", "DunkP2"]
    assert names[0] == ["Flush"]
    plans = mg_relaxed_plans(build_mg(CBTC.init, CBTC), CBTC.goal)
    assert [p.value for p in plans] == [2, 2]


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_bt_labelled_relaxed_plan_counts_every_package(n):
    p = gen_bt(n)
    assert value(p, "lug:rp", direction="progress") == n
    assert value(p, "mg:rpu", direction="progress") == n
    assert value(p, "mg:rp:max", direction="progress") == 1


def test_goal_satisfied_gives_zero():
    for text in ALL_SPECS:
        assert value(CBTC, text, bs_p=CBTC.goal, bs_i=CBTC.goal) == 0


def test_unreachable_goal_is_infinite():
    p = gen_bt(2)
    assert value(p, "lug:level", bs_i=p.f("(and inP1 inP2)")) == INF
    assert value(p, "sg:rp", bs_p=p.f("(and (not arm) inP1 (not inP2))"), bs_i=p.f("arm")) == INF


PROBLEMS = [gen_bt(3), gen_btc(3), CBTC, gen_ring(2)]


def _beliefs(problem, seed, count=4):
    return random_reachable_beliefs(problem, count, random.Random(seed))


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(PROBLEMS), st.integers(0, 10_000))
def test_labelled_graph_matches_multiple_graphs(problem, seed):
    """Values that can be computed both per world and over labels agree."""
    for bs in _beliefs(problem, seed):
        v = lambda t: value(problem, t, bs_p=bs, direction="progress")  # noqa: E731
        assert v("lug:level") == v("mg:level:max")
        assert v("lug:max") == v("mg:max:max")
        assert v("lug:level:sum") == v("mg:level:sum")
        assert v("lug:max:sum") == v("mg:max:sum")
        assert v("lug:sum:sum") == v("mg:sum:sum")
        assert v("lug:sum") >= v("mg:sum:max")


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(PROBLEMS), st.integers(0, 10_000))
def test_aggregation_ordering(problem, seed):
    for bs in _beliefs(problem, seed):
        v = lambda t: value(problem, t, bs_p=bs, direction="progress")  # noqa: E731
        assert v("mg:level:max") <= v("mg:level:sum")
        assert v("mg:rp:max") <= v("mg:rpu") <= v("mg:rp:sum")
        assert v("mg:max:max") <= v("mg:level:max")
        assert v("lug:level") <= v("lug:level:fx")
        assert v("mg:level:max") <= v("mg:level:max:dyx")


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(PROBLEMS), st.integers(0, 10_000))
def test_level_heuristics_are_admissible(problem, seed):
    for bs in _beliefs(problem, seed, 2):
        star = bfs_oracle(problem, start=bs)
        for text in ("mg:level:max", "lug:level", "lug:level:fx", "lug:level:fx-ix", "sg:level"):
            assert value(problem, text, bs_p=bs, direction="progress") <= star


def test_sampled_heuristics_are_deterministic():
    p = gen_btc(4)
    for text in ("mg:rp:sum", "lug:rp", "mg:rpu"):
        a = Heuristic(p, parse_spec(text, fraction=0.5, seed=3)).estimate(p.init, p.goal)
        b = Heuristic(p, parse_spec(text, fraction=0.5, seed=3)).estimate(p.init, p.goal)
        full = Heuristic(p, parse_spec(text, fraction=1.0, seed=3)).estimate(p.init, p.goal)
        assert a == b
        assert full == value(p, text)


def test_progression_memoises_per_belief():
    p = gen_btc(3)
    h = Heuristic(p, parse_spec("lug:rp", direction="progress"))
    first = h(p.init)
    assert h(p.init) == first
    assert h.evaluations == 1
