"""Regression and progression of belief states."""
from __future__ import annotations

from typing import Sequence

from .formula import FALSE, TRUE, Formula, FormulaStore, Literal
from .model import Action


class ConflictingEffects(RuntimeError):
    """Two applicable effects assign opposite values to a fluent."""


class SensingInRegression(ValueError):
    pass


def _cache(store: FormulaStore) -> dict:
    c = getattr(store, "_transition_cache", None)
    if c is None:
        c = {}
        store._transition_cache = c
    return c


def _antecedent_node(store: FormulaStore, e) -> int:
    return store.cube(e.antecedent).node


def _support(store: FormulaStore, a: Action, lit: Literal) -> tuple[int, int]:
    """Disjunction of antecedents of effects giving ``lit`` and of those giving ``~lit``."""
    key = ("support", a, lit)
    c = _cache(store)
    hit = c.get(key)
    if hit is None:
        gives = takes = FALSE
        for e in a.effects:
            if lit in e.consequent:
                gives = store.or_(gives, _antecedent_node(store, e))
            if ~lit in e.consequent:
                takes = store.or_(takes, _antecedent_node(store, e))
        hit = (gives, takes)
        c[key] = hit
    return hit


def _causes(store: FormulaStore, a: Action, lit: Literal) -> int:
    """Sigma(a, l) and IP(a, l): l holds after a, and no effect destroys it."""
    key = ("causes", a, lit)
    c = _cache(store)
    hit = c.get(key)
    if hit is None:
        gives, takes = _support(store, a, lit)
        sigma = store.or_(store._lit_node(lit), gives)
        hit = store.and_(sigma, store.not_(takes))
        c[key] = hit
    return hit


def regress(bs: Formula, a: Action) -> Formula:
    """Weakest belief state from which ``a`` is applicable and leads into ``bs``."""
    if a.sensing:
        raise SensingInRegression(f"{a.name} has observations; regression is conformant only")
    store = bs.store
    node = store.cube(a.precondition).node
    if node == FALSE or bs.is_false:
        return store.false
    for clause in bs.clauses():
        c = FALSE
        for lit in clause:
            c = store.or_(c, _causes(store, a, lit))
        node = store.and_(node, c)
        if node == FALSE:
            break
    return Formula(store, node)


def is_relevant(a: Action, bs: Formula) -> bool:
    """Unconditional effect consistent with every constituent of ``bs`` and
    some consequent literal occurring in a constituent."""
    if bs.is_false:
        return False
    cubes = bs.constituents()
    uncond = a.effects[0].consequent
    for cube in cubes:
        lits = set(cube)
        if any(~l in lits for l in uncond):
            return False
    present = {l for cube in cubes for l in cube}
    return any(l in present for e in a.effects for l in e.consequent)


def applicable(bs: Formula, a: Action) -> bool:
    return bs.entails(bs.store.cube(a.precondition))


def progress_state(state: Sequence[bool], a: Action) -> tuple[bool, ...]:
    for fl, pos in a.precondition:
        if state[fl] != pos:
            raise ValueError(f"{a.name} is not applicable in this state")
    out = list(state)
    assigned: dict[int, bool] = {}
    for e in a.effects:
        if all(state[fl] == pos for fl, pos in e.antecedent):
            for fl, pos in e.consequent:
                if assigned.setdefault(fl, pos) != pos:
                    raise ConflictingEffects(f"{a.name} both adds and deletes fluent {fl}")
    for fl, pos in assigned.items():
        out[fl] = pos
    return tuple(out)


def image(bs: Formula, a: Action) -> Formula:
    """Causative successor of ``bs`` under ``a`` (ignores the precondition test)."""
    store = bs.store
    node = store.and_(bs.node, store.cube(a.precondition).node)
    if node == FALSE:
        return store.false
    touched = sorted({l.fluent for e in a.effects for l in e.consequent})
    if not touched:
        return Formula(store, node)
    rel = TRUE
    for fl in touched:
        adds, dels = _support(store, a, Literal(fl, True))
        if store.and_(node, store.and_(adds, dels)) != FALSE:
            raise ConflictingEffects(f"{a.name} both adds and deletes {store.names[fl]}")
        cur = store.var(2 * fl)
        new = store.and_(store.or_(cur, adds), store.not_(dels))
        nxt = store.var(2 * fl + 1)
        rel = store.and_(rel, store.ite(nxt, new, store.not_(new)))
    levels = frozenset(2 * fl for fl in touched)
    out = store.and_exists(node, rel, levels)
    mapping = {2 * fl + 1: 2 * fl for fl in touched}
    out = store.relabel(out, mapping, ("down", levels))
    return Formula(store, out)


def progress_branches(bs: Formula, a: Action) -> list[tuple[int | None, Formula]]:
    """Like :func:`progress` but pairs each successor with its reading index."""
    if bs.is_false or not applicable(bs, a):
        return []
    succ = image(bs, a)
    if not a.observations:
        return [(None, succ)]
    out = []
    for j, o in enumerate(a.observations):
        branch = succ & o
        if not branch.is_false:
            out.append((j, branch))
    return out


def progress(bs: Formula, a: Action) -> list[Formula]:
    """Successor belief states: one per non-empty observation class.

    Returns an empty list when ``a`` is not applicable in every state of ``bs``.
    """
    if bs.is_false or not applicable(bs, a):
        return []
    succ = image(bs, a)
    if not a.observations:
        return [succ]
    out: list[Formula] = []
    for o in a.observations:
        branch = succ & o
        if not branch.is_false and branch not in out:
            out.append(branch)
    return out


def progress_models(bs: Formula, a: Action) -> set[tuple[bool, ...]]:
    """Model-by-model successor set, used as a cross-check of :func:`image`."""
    return {progress_state(s, a) for s in bs.models()}
