from __future__ import annotations

import time

import pytest

from beliefplan.domains import gen_bt, gen_btc, gen_cbtc, gen_ring
from beliefplan.graphs import build_lug, domain_of, state_graph
from beliefplan.mutex import (
    NONE,
    Depth,
    MutexScheme,
    Worlds,
    actions_interfere,
    literal_mutexes,
)
from beliefplan.transition import progress_state

from support import lug_mg_mismatches

CBTC = gen_cbtc()


def test_scheme_parsing():
    assert MutexScheme.parse("fx-ix") == MutexScheme(Depth.FX, Worlds.INTERSECT)
    assert MutexScheme.parse("dyx") == MutexScheme(Depth.DyX, Worlds.SAME)
    assert MutexScheme.parse(None) == NONE == MutexScheme.parse("nx")
    assert not NONE.enabled and MutexScheme.parse("stx").enabled
    assert str(MutexScheme.parse("fx-cross")) == "fx-cross"
    with pytest.raises(ValueError):
        MutexScheme.parse("zx")
    with pytest.raises(ValueError):
        MutexScheme.parse("fx-yy")


def test_dunk_interference():
    dom = domain_of(CBTC)
    d1, d2, fl = (dom.action_named(n) for n in ("DunkP1", "DunkP2", "Flush"))
    # each dunk clogs while the other needs an unclogged toilet
    assert actions_interfere(dom, d1, d2)
    assert actions_interfere(dom, d1, fl)


def test_cbtc_goal_literals_mutex_at_level_two():
    lug = build_lug(CBTC.init, CBTC, "fx")
    not_arm, not_clog = CBTC.lit("(not arm)"), CBTC.lit("(not clog)")
    assert lug.same_world_mutex("literal", 2, not_arm, not_clog) == CBTC.init
    assert lug.same_world_mutex("literal", 3, not_arm, not_clog).is_false
    plain = build_lug(CBTC.init, CBTC)
    assert plain.mutexes("literal", 2) == {}


def test_complementary_literals_are_mutex():
    for st in CBTC.init.models():
        g = state_graph(CBTC, st, MutexScheme.parse("stx"))
        clog, unclog = CBTC.lit("clog"), CBTC.lit("(not clog)")
        assert g.lit_mutex(1, clog, unclog)


@pytest.mark.parametrize("scheme", ["dyx", "fx"])
@pytest.mark.parametrize("problem", [gen_bt(2), gen_btc(2), CBTC], ids=lambda p: p.name)
def test_labelled_mutexes_agree_with_per_world_graphs(problem, scheme):
    assert lug_mg_mismatches(problem, scheme) == 0


@pytest.mark.parametrize("problem", [CBTC, gen_btc(3), gen_ring(2)], ids=lambda p: p.name)
def test_deeper_schemes_find_more_mutexes(problem):
    for st in problem.init.models():
        graphs = [state_graph(problem, st, MutexScheme.parse(d)) for d in ("nx", "stx", "dyx", "fx")]
        top = max(g.last for g in graphs) + 1
        for k in range(top):
            for weak, strong in zip(graphs, graphs[1:]):
                for kind in ("literal", "action", "effect"):
                    assert weak.mutexes(kind, k) <= strong.mutexes(kind, k)


@pytest.mark.parametrize("problem", [CBTC, gen_btc(3), gen_ring(2)], ids=lambda p: p.name)
def test_cross_world_diagonal_matches_same_world(problem):
    s = problem.store
    same = build_lug(problem.init, problem, "fx-sx")
    for worlds in ("ix", "cross"):
        pair = build_lug(problem.init, problem, f"fx-{worlds}")
        assert pair.last == same.last
        for k in range(same.last + 1):
            keys = set(same.lit_mx[k]) | set(pair.lit_mx[k])
            for x, y in keys:
                assert s.diagonal(pair.mutex_node("literal", k, x, y)) == same.mutex_node("literal", k, x, y)


def test_intersect_labels_refine_cross_labels():
    s = CBTC.store
    ix = build_lug(CBTC.init, CBTC, "fx-ix")
    cross = build_lug(CBTC.init, CBTC, "fx-cross")
    for k in range(ix.last + 1):
        for key, node in ix.lit_mx[k].items():
            assert s.implies(node, cross.lit_mx[k].get(key, 0))


@pytest.mark.parametrize("problem", [CBTC, gen_bt(2), gen_btc(2), gen_btc(3)], ids=lambda p: p.name)
def test_literal_mutexes_are_sound(problem):
    """No serial execution of k steps from a world ends with a pair mutex at level k."""
    fx = MutexScheme.parse("fx")
    for st in problem.init.models():
        g = state_graph(problem, st, fx)
        frontier = {st}
        for k in range(1, 4):
            nxt = set()
            for cur in frontier:
                for a in problem.actions:
                    if all(cur[f] == v for f, v in a.precondition):
                        nxt.add(progress_state(cur, a))
            frontier = nxt
            for pair in literal_mutexes(g, k, fx):
                x, y = tuple(pair)
                for cur in frontier:
                    assert not (cur[x.fluent] == x.positive and cur[y.fluent] == y.positive)


def test_accessor_rejects_other_scheme():
    g = state_graph(CBTC, next(CBTC.init.models()), MutexScheme.parse("dyx"))
    with pytest.raises(ValueError):
        literal_mutexes(g, 1, MutexScheme.parse("fx"))


def test_ring_fx_within_budget():
    t = time.perf_counter()
    ring = gen_ring(2)
    lug = build_lug(ring.init, ring, "fx")
    assert time.perf_counter() - t < 5
    assert not lug.truncated
    assert lug.lit_mx[lug.last]
