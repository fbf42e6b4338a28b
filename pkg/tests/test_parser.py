from __future__ import annotations

import pytest

from beliefplan.domains import GENERATORS, bundled, generate, reference_plan
from beliefplan.formula import FormulaStore, Literal
from beliefplan.model import Effect, ModelError, Problem, make_action
from beliefplan.parser import ParseError, parse, to_text
from beliefplan.search import validate

SMALL = ["bt:2", "bt:3", "btc:2", "btc:3", "cbtc", "btcs:2", "ring:2", "ring:3", "cube:3"]


def _src(body: str) -> str:
    return "(define (problem p)\n (:fluents a b c)\n" + body + ")"


@pytest.mark.parametrize("body,where,message", [
    (" (:init a)\n (:goal z)", (4, 9), "undeclared fluent"),
    (" (:action x :effect (or a b))\n (:init a)\n (:goal b)", (3, 21), "disjunctive effects"),
    (" (:action x :effect (oneof a b))\n (:init a)\n (:goal b)", (3, 21), "disjunctive effects"),
    (" (:init (and a (not a)))\n (:goal b)", (3, 2), "inconsistent"),
])
def test_parse_errors_carry_position(body, where, message):
    with pytest.raises(ParseError) as info:
        parse(_src(body))
    assert (info.value.line, info.value.col) == where
    assert message in str(info.value)


def test_missing_init_and_unbalanced_input():
    with pytest.raises(ParseError, match="missing :init"):
        parse("(define (problem p)\n (:fluents a)\n (:goal a))")
    with pytest.raises(ParseError, match="unclosed"):
        parse("(define (problem p)\n (:fluents a b")


def test_worked_example_file():
    p = bundled("btcs")
    assert [a.name for a in p.actions] == ["DunkP1", "DunkP2", "Flush", "DetectMetal"]
    assert p.init.count() == 2
    assert p.action("DetectMetal").sensing
    assert not p.action("Flush").sensing
    assert p.without_sensing().conformant


def test_disjunctive_precondition_and_antecedent_are_split():
    p = parse(_src(" (:action x :precondition (or a b) :effect (when (or a c) b))\n"
                   " (:init a)\n (:goal b)"))
    assert [a.name for a in p.actions] == ["x#1", "x#2"]
    for a in p.actions:
        conditional = [e for e in a.effects if e.antecedent]
        assert len(conditional) == 2


def test_lifted_file_grounds_to_bomb_in_toilet():
    p = bundled("bt-lifted")
    assert p.fluents == ["armed", "in_p1", "in_p2", "in_p3"]
    assert [a.name for a in p.actions] == ["dunk_p1", "dunk_p2", "dunk_p3"]
    assert p.init.count() == 3
    assert validate(["dunk_p1", "dunk_p2", "dunk_p3"], p).valid


@pytest.mark.parametrize("name", SMALL + ["btcs"])
def test_printer_round_trip(name):
    p = bundled(name) if name == "btcs" else generate(name)
    text = to_text(p)
    q = parse(text)
    assert to_text(q) == text
    assert q.fluents == p.fluents
    assert q.init.count() == p.init.count()
    assert [a.name for a in q.actions] == [a.name for a in p.actions]


@pytest.mark.parametrize("name", SMALL)
def test_reference_plans_are_strong(name):
    p = generate(name)
    report = validate(reference_plan(p.name), p)
    assert report.valid, report.reason


def test_generator_errors():
    with pytest.raises(ValueError):
        generate("nope:2")
    with pytest.raises(ValueError):
        generate("bt")
    with pytest.raises(ValueError):
        generate("cube:4")
    assert set(GENERATORS) == {"bt", "btc", "cbtc", "btcs", "ring", "cube"}


def test_initial_belief_sizes():
    assert generate("ring:2").init.count() == 2 * 3 ** 2
    assert generate("cube:3").init.count() == 27
    assert len(generate("ring:2").fluents) == 8


def test_effect_and_action_validation():
    with pytest.raises(ModelError):
        Effect((), (Literal(0), Literal(0, False)))
    a = make_action("x", when=[([Literal(0)], [Literal(1)])])
    assert a.effects[0] == Effect()
    assert a.causative and not a.sensing


def test_problem_rejects_empty_init():
    s = FormulaStore(["a"])
    with pytest.raises(ModelError):
        Problem("p", s, (), s.false, s.literal("a"))
