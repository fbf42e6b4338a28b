from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from beliefplan.formula import (
    FormulaStore,
    Literal,
    TooManyWorlds,
    UniverseMismatch,
    all_states,
    count_models,
    entails,
    to_clauses,
    to_constituents,
)

NAMES = ["a", "b", "c", "d"]
STORE = FormulaStore(NAMES)
STATES = list(all_states(len(NAMES)))

truth_tables = st.sets(st.sampled_from(STATES))


def from_table(table):
    return STORE.disj_all(STORE.state(s) for s in table)


@given(truth_tables)
def test_models_and_count_match_table(table):
    f = from_table(table)
    assert set(f.models()) == set(table)
    assert f.count() == count_models(f) == len(table)


@given(truth_tables)
def test_same_function_same_handle(table):
    f = from_table(table)
    g = ~STORE.conj_all(~STORE.state(s) for s in table)
    assert f == g
    assert f.node == g.node


@given(truth_tables)
def test_normal_forms_round_trip(table):
    f = from_table(table)
    assert STORE.from_clauses(to_clauses(f)) == f
    assert STORE.from_constituents(to_constituents(f)) == f


@given(truth_tables)
def test_clauses_are_prime_implicates(table):
    f = from_table(table)
    for clause in to_clauses(f):
        assert f.entails(STORE.clause(clause))
        for drop in range(len(clause)):
            shorter = clause[:drop] + clause[drop + 1:]
            assert not f.entails(STORE.clause(shorter))


@given(truth_tables)
def test_constituents_are_prime_implicants(table):
    f = from_table(table)
    for cube in to_constituents(f):
        assert STORE.cube(cube).entails(f)
        for drop in range(len(cube)):
            assert not STORE.cube(cube[:drop] + cube[drop + 1:]).entails(f)


@given(truth_tables, truth_tables)
def test_entailment_is_subset(t1, t2):
    f, g = from_table(t1), from_table(t2)
    assert entails(f, g) == (set(t1) <= set(t2))
    assert (f & g) == from_table(set(t1) & set(t2))
    assert (f | g) == from_table(set(t1) | set(t2))
    assert (f - g) == from_table(set(t1) - set(t2))


@given(truth_tables)
def test_text_round_trip(table):
    f = from_table(table)
    assert STORE.parse(STORE.to_text(f)) == f
    assert STORE.parse(STORE.to_text(f, form="dnf")) == f


@given(truth_tables, st.sets(st.integers(0, len(NAMES) - 1)))
def test_existential_projection(table, fluents):
    f = from_table(table)
    g = STORE.wrap(STORE.exists(f.node, frozenset(2 * i for i in fluents)))
    expected = {
        s for s in STATES
        if any(all(s[j] == t[j] for j in range(len(NAMES)) if j not in fluents) for t in table)
    }
    assert set(g.models()) == expected


@given(truth_tables, truth_tables)
def test_prime_swap_and_diagonal(t1, t2):
    s = STORE
    f, g = from_table(t1), from_table(t2)
    rel = s.and_(f.node, s.prime(g.node))
    assert s.swap(rel) == s.and_(g.node, s.prime(f.node))
    assert s.unprime(s.prime(f.node)) == f.node
    assert s.diagonal(rel) == (f & g).node
    assert s.diagonal(s.identity_relation()) == s.true.node


def test_literal_negation_and_names():
    a = STORE.literal("a")
    assert ~Literal(0) == Literal(0, False)
    assert STORE.literal("(not a)") == ~a
    assert STORE.lit_name(Literal(1, False)) == "(not b)"
    assert STORE.parse_literal("(not c)") == Literal(2, False)


def test_truthiness_is_an_error():
    with pytest.raises(TypeError):
        bool(STORE.literal("a"))


def test_mixing_stores_is_rejected():
    other = FormulaStore(NAMES)
    with pytest.raises(UniverseMismatch):
        STORE.literal("a") & other.literal("a")


def test_model_cap():
    s = FormulaStore([f"x{i}" for i in range(30)], model_cap=1000)
    with pytest.raises(TooManyWorlds):
        s.true.count()


def test_exactly_one():
    f = STORE.exactly_one([STORE.literal(n) for n in NAMES])
    assert f.count() == 4
    assert all(sum(m) == 1 for m in f.models())


@settings(max_examples=50)
@given(truth_tables)
def test_holds_in_matches_models(table):
    f = from_table(table)
    for s in STATES:
        assert f.holds_in(s) == (s in table)
