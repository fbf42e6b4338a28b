"""Canonical propositional formulas over a fixed fluent universe.

Formulas are nodes of a reduced ordered binary decision diagram kept in a
shared :class:`FormulaStore`.  Equivalent formulas get the same node, so
equality of handles is logical equivalence.

Fluent ``i`` sits at diagram level ``2*i``.  Every fluent also owns a
"primed" twin at level ``2*i + 1``; the primed copies are used internally
for image computation and for relations between pairs of worlds.  Public
formulas (belief states, labels) only mention unprimed fluents.
"""
from __future__ import annotations

import itertools
from typing import Iterable, Iterator, NamedTuple, Sequence

FALSE = 0
TRUE = 1

MODEL_COUNT_CAP = 2**20
ENUMERATION_CAP = 2**16
NORMAL_FORM_CAP = 2**16


class TooManyWorlds(RuntimeError):
    """Raised when a model count or enumeration exceeds the store cap."""


class UniverseMismatch(ValueError):
    """Raised when formulas from different stores are combined."""


class Literal(NamedTuple):
    fluent: int
    positive: bool = True

    def __invert__(self) -> Literal:
        return Literal(self.fluent, not self.positive)


State = tuple  # tuple[bool, ...], one entry per fluent


class Formula:
    """Handle to a node of a :class:`FormulaStore`."""

    __slots__ = ("store", "node")

    def __init__(self, store: FormulaStore, node: int):
        self.store = store
        self.node = node

    def _other(self, other: Formula) -> int:
        if not isinstance(other, Formula):
            return NotImplemented
        if other.store is not self.store:
            raise UniverseMismatch("formulas belong to different stores")
        return other.node

    def __and__(self, other: Formula) -> Formula:
        return Formula(self.store, self.store.and_(self.node, self._other(other)))

    def __or__(self, other: Formula) -> Formula:
        return Formula(self.store, self.store.or_(self.node, self._other(other)))

    def __invert__(self) -> Formula:
        return Formula(self.store, self.store.not_(self.node))

    def __sub__(self, other: Formula) -> Formula:
        s = self.store
        return Formula(s, s.and_(self.node, s.not_(self._other(other))))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Formula)
            and other.store is self.store
            and other.node == self.node
        )

    def __hash__(self) -> int:
        return hash(self.node)

    def __bool__(self):
        raise TypeError("use is_true/is_false to test a formula")

    @property
    def is_false(self) -> bool:
        return self.node == FALSE

    @property
    def is_true(self) -> bool:
        return self.node == TRUE

    def entails(self, other: Formula) -> bool:
        return self.store.implies(self.node, self._other(other))

    def holds_in(self, state: Sequence[bool]) -> bool:
        return self.store.evaluate(self.node, state)

    def count(self) -> int:
        return self.store.count(self.node)

    def models(self, restrict: Iterable[int] | None = None) -> Iterator[State]:
        return self.store.models(self.node, restrict)

    def clauses(self) -> list[tuple[Literal, ...]]:
        return self.store.clauses(self.node)

    def constituents(self) -> list[tuple[Literal, ...]]:
        return self.store.constituents(self.node)

    def to_text(self) -> str:
        return self.store.to_text(self)

    def __repr__(self) -> str:
        if self.node <= TRUE:
            return "Formula(true)" if self.node else "Formula(false)"
        try:
            return f"Formula({self.store.to_text(self)})"
        except (TooManyWorlds, ValueError):
            return f"Formula(<node {self.node}>)"


class FormulaStore:
    """Shared, hash-consed decision diagram over ``len(names)`` fluents."""

    def __init__(
        self,
        names: Sequence[str],
        model_cap: int = MODEL_COUNT_CAP,
        enumeration_cap: int = ENUMERATION_CAP,
        normal_form_cap: int = NORMAL_FORM_CAP,
    ):
        self.names = list(names)
        if len(set(self.names)) != len(self.names):
            raise ValueError("fluent names must be unique")
        self.index = {n: i for i, n in enumerate(self.names)}
        self.n = len(self.names)
        self.model_cap = model_cap
        self.enumeration_cap = enumeration_cap
        self.normal_form_cap = normal_form_cap
        self._term = 2 * self.n
        self._level = [self._term, self._term]
        self._lo = [FALSE, TRUE]
        self._hi = [FALSE, TRUE]
        self._unique: dict[tuple[int, int, int], int] = {}
        self._and_cache: dict[tuple[int, int], int] = {}
        self._or_cache: dict[tuple[int, int], int] = {}
        self._not_cache: dict[int, int] = {}
        self._misc: dict[tuple, int] = {}
        self._count_cache: dict[int, int] = {}
        self._isop_cache: dict[tuple[int, int], tuple] = {}
        self.true = Formula(self, TRUE)
        self.false = Formula(self, FALSE)

    # ------------------------------------------------------------------
    # node level primitives

    def __len__(self) -> int:
        return len(self._level)

    def _mk(self, level: int, lo: int, hi: int) -> int:
        if lo == hi:
            return lo
        key = (level, lo, hi)
        node = self._unique.get(key)
        if node is None:
            node = len(self._level)
            self._level.append(level)
            self._lo.append(lo)
            self._hi.append(hi)
            self._unique[key] = node
        return node

    def _cofactors(self, node: int, level: int) -> tuple[int, int]:
        if self._level[node] == level:
            return self._lo[node], self._hi[node]
        return node, node

    def not_(self, a: int) -> int:
        if a <= TRUE:
            return 1 - a
        r = self._not_cache.get(a)
        if r is None:
            r = self._mk(self._level[a], self.not_(self._lo[a]), self.not_(self._hi[a]))
            self._not_cache[a] = r
            self._not_cache[r] = a
        return r

    def and_(self, a: int, b: int) -> int:
        if a == FALSE or b == FALSE:
            return FALSE
        if a == TRUE or a == b:
            return b
        if b == TRUE:
            return a
        if a > b:
            a, b = b, a
        key = (a, b)
        r = self._and_cache.get(key)
        if r is not None:
            return r
        la, lb = self._level[a], self._level[b]
        if la == lb:
            r = self._mk(la, self.and_(self._lo[a], self._lo[b]), self.and_(self._hi[a], self._hi[b]))
        elif la < lb:
            r = self._mk(la, self.and_(self._lo[a], b), self.and_(self._hi[a], b))
        else:
            r = self._mk(lb, self.and_(a, self._lo[b]), self.and_(a, self._hi[b]))
        self._and_cache[key] = r
        return r

    def or_(self, a: int, b: int) -> int:
        if a == TRUE or b == TRUE:
            return TRUE
        if a == FALSE or a == b:
            return b
        if b == FALSE:
            return a
        if a > b:
            a, b = b, a
        key = (a, b)
        r = self._or_cache.get(key)
        if r is not None:
            return r
        la, lb = self._level[a], self._level[b]
        if la == lb:
            r = self._mk(la, self.or_(self._lo[a], self._lo[b]), self.or_(self._hi[a], self._hi[b]))
        elif la < lb:
            r = self._mk(la, self.or_(self._lo[a], b), self.or_(self._hi[a], b))
        else:
            r = self._mk(lb, self.or_(a, self._lo[b]), self.or_(a, self._hi[b]))
        self._or_cache[key] = r
        return r

    def ite(self, f: int, g: int, h: int) -> int:
        return self.or_(self.and_(f, g), self.and_(self.not_(f), h))

    def implies(self, a: int, b: int) -> bool:
        return self.and_(a, self.not_(b)) == FALSE

    def var(self, level: int) -> int:
        return self._mk(level, FALSE, TRUE)

    def exists(self, f: int, levels: frozenset[int]) -> int:
        """Existentially quantify the given diagram levels out of ``f``."""
        if f <= TRUE or not levels:
            return f
        key = ("ex", f, levels)
        r = self._misc.get(key)
        if r is not None:
            return r
        lv = self._level[f]
        lo = self.exists(self._lo[f], levels)
        hi = self.exists(self._hi[f], levels)
        if lv in levels:
            r = self.or_(lo, hi)
        else:
            r = self._mk(lv, lo, hi)
        self._misc[key] = r
        return r

    def and_exists(self, f: int, g: int, levels: frozenset[int]) -> int:
        """Relational product: ``exists levels . f and g``."""
        if f == FALSE or g == FALSE:
            return FALSE
        if f == TRUE:
            return self.exists(g, levels)
        if g == TRUE or f == g:
            return self.exists(f, levels)
        if f > g:
            f, g = g, f
        key = ("ae", f, g, levels)
        r = self._misc.get(key)
        if r is not None:
            return r
        lv = min(self._level[f], self._level[g])
        f0, f1 = self._cofactors(f, lv)
        g0, g1 = self._cofactors(g, lv)
        lo = self.and_exists(f0, g0, levels)
        if lv in levels:
            r = TRUE if lo == TRUE else self.or_(lo, self.and_exists(f1, g1, levels))
        else:
            r = self._mk(lv, lo, self.and_exists(f1, g1, levels))
        self._misc[key] = r
        return r

    def shift(self, f: int, delta: int, tag: str) -> int:
        """Move every variable of ``f`` by ``delta`` levels (order preserving)."""
        if f <= TRUE:
            return f
        key = (tag, f)
        r = self._misc.get(key)
        if r is None:
            r = self._mk(
                self._level[f] + delta,
                self.shift(self._lo[f], delta, tag),
                self.shift(self._hi[f], delta, tag),
            )
            self._misc[key] = r
        return r

    def relabel(self, f: int, mapping: dict[int, int], tag) -> int:
        """Rename diagram levels by ``mapping``; the map must keep the order."""
        if f <= TRUE:
            return f
        key = ("relabel", tag, f)
        r = self._misc.get(key)
        if r is None:
            lv = self._level[f]
            r = self._mk(
                mapping.get(lv, lv),
                self.relabel(self._lo[f], mapping, tag),
                self.relabel(self._hi[f], mapping, tag),
            )
            self._misc[key] = r
        return r

    def prime(self, f: int) -> int:
        """Copy of an unprimed formula over the primed twins."""
        return self.shift(f, 1, "prime")

    def unprime(self, f: int) -> int:
        """Inverse of :meth:`prime` for formulas over primed twins only."""
        return self.shift(f, -1, "unprime")

    def swap(self, f: int) -> int:
        """Exchange every fluent with its primed twin."""
        if f <= TRUE:
            return f
        key = ("swap", f)
        r = self._misc.get(key)
        if r is None:
            lv = self._level[f]
            r = self.ite(self.var(lv ^ 1), self.swap(self._hi[f]), self.swap(self._lo[f]))
            self._misc[key] = r
        return r

    def diagonal(self, f: int) -> int:
        """Substitute each primed twin by its fluent (restrict a relation to X = X')."""
        if f <= TRUE:
            return f
        key = ("diag", f)
        r = self._misc.get(key)
        if r is None:
            lv = self._level[f]
            r = self.ite(self.var(lv & ~1), self.diagonal(self._hi[f]), self.diagonal(self._lo[f]))
            self._misc[key] = r
        return r

    def identity_relation(self) -> int:
        """The relation X = X' over all fluents."""
        key = ("ident",)
        r = self._misc.get(key)
        if r is None:
            r = TRUE
            for i in reversed(range(self.n)):
                x, y = 2 * i, 2 * i + 1
                r = self._mk(x, self._mk(y, r, FALSE), self._mk(y, FALSE, r))
            self._misc[key] = r
        return r

    def evaluate(self, f: int, state: Sequence[bool]) -> bool:
        level, lo, hi = self._level, self._lo, self._hi
        while f > TRUE:
            f = hi[f] if state[level[f] >> 1] else lo[f]
        return f == TRUE

    # ------------------------------------------------------------------
    # construction helpers

    def _lit_node(self, lit: Literal) -> int:
        v = self.var(2 * lit.fluent)
        return v if lit.positive else self.not_(v)

    def _cube_node(self, lits: Iterable[Literal]) -> int:
        by_fluent: dict[int, bool] = {}
        for fl, pos in lits:
            if by_fluent.setdefault(fl, pos) != pos:
                return FALSE
        node = TRUE
        for fl in sorted(by_fluent, reverse=True):
            node = self._mk(2 * fl, FALSE, node) if by_fluent[fl] else self._mk(2 * fl, node, FALSE)
        return node

    def wrap(self, node: int) -> Formula:
        return Formula(self, node)

    def literal(self, lit: Literal | str) -> Formula:
        if isinstance(lit, str):
            lit = self.parse_literal(lit)
        return Formula(self, self._lit_node(lit))

    def cube(self, lits: Iterable[Literal]) -> Formula:
        return Formula(self, self._cube_node(lits))

    def clause(self, lits: Iterable[Literal]) -> Formula:
        return Formula(self, self.not_(self._cube_node(~l for l in lits)))

    def state(self, state: Sequence[bool]) -> Formula:
        return self.cube(Literal(i, bool(v)) for i, v in enumerate(state))

    def conj_all(self, fs: Iterable[Formula]) -> Formula:
        node = TRUE
        for f in fs:
            node = self.and_(node, f.node)
            if node == FALSE:
                break
        return Formula(self, node)

    def disj_all(self, fs: Iterable[Formula]) -> Formula:
        node = FALSE
        for f in fs:
            node = self.or_(node, f.node)
            if node == TRUE:
                break
        return Formula(self, node)

    def exactly_one(self, fs: Sequence[Formula]) -> Formula:
        out = self.false
        for i, f in enumerate(fs):
            term = f
            for j, g in enumerate(fs):
                if i != j:
                    term = term & ~g
            out = out | term
        return out

    def from_clauses(self, clauses: Iterable[Iterable[Literal]]) -> Formula:
        return self.conj_all(self.clause(c) for c in clauses)

    def from_constituents(self, cubes: Iterable[Iterable[Literal]]) -> Formula:
        return self.disj_all(self.cube(c) for c in cubes)

    # ------------------------------------------------------------------
    # model counting and enumeration

    def _fidx(self, node: int) -> int:
        return self._level[node] >> 1

    def count(self, f: int) -> int:
        """Number of complete states over the fluent universe satisfying ``f``."""
        total = self._count(f) << self._fidx(f)
        if total > self.model_cap:
            raise TooManyWorlds(f"{total} models exceed the cap of {self.model_cap}")
        return total

    def _count(self, f: int) -> int:
        if f <= TRUE:
            return f
        r = self._count_cache.get(f)
        if r is None:
            if self._level[f] & 1:
                raise ValueError("model counting is only defined for unprimed formulas")
            fi = self._fidx(f)
            lo, hi = self._lo[f], self._hi[f]
            r = (self._count(lo) << (self._fidx(lo) - fi - 1)) + (
                self._count(hi) << (self._fidx(hi) - fi - 1)
            )
            self._count_cache[f] = r
        return r

    def models(self, f: int, restrict: Iterable[int] | None = None) -> Iterator[State]:
        """Enumerate the models of ``f`` as tuples of booleans.

        With ``restrict`` the remaining fluents are projected away and the
        tuples are indexed like the sorted ``restrict`` list.
        """
        if restrict is not None:
            keep = sorted(set(restrict))
            drop = frozenset(2 * i for i in range(self.n) if i not in set(keep))
            g = self.exists(f, drop)
            n_total = self._count(g) << self._fidx(g)
            n_proj = n_total >> (self.n - len(keep))
            if n_proj > self.enumeration_cap:
                raise TooManyWorlds(f"{n_proj} models exceed the enumeration cap")
            for full in self._enumerate(g, keep):
                yield tuple(full[i] for i in keep)
            return
        total = self._count(f) << self._fidx(f)
        if total > self.enumeration_cap:
            raise TooManyWorlds(f"{total} models exceed the enumeration cap")
        yield from self._enumerate(f, range(self.n))

    def _enumerate(self, f: int, fluents: Iterable[int]) -> Iterator[State]:
        fluents = list(fluents)
        n = self.n

        def walk(node: int, pos: int, partial: list):
            # pos indexes into ``fluents``
            if node == FALSE:
                return
            if pos == len(fluents):
                yield tuple(partial)
                return
            fl = fluents[pos]
            if node != TRUE and self._level[node] == 2 * fl:
                lo, hi = self._lo[node], self._hi[node]
            else:
                lo = hi = node
            partial[fl] = False
            yield from walk(lo, pos + 1, partial)
            partial[fl] = True
            yield from walk(hi, pos + 1, partial)
            partial[fl] = False

        yield from walk(f, 0, [False] * n)

    # ------------------------------------------------------------------
    # normal forms

    def _isop(self, lower: int, upper: int) -> tuple[tuple, int]:
        """Irredundant sum of products between ``lower`` and ``upper``."""
        if lower == FALSE:
            return (), FALSE
        if upper == TRUE:
            return ((),), TRUE
        key = (lower, upper)
        hit = self._isop_cache.get(key)
        if hit is not None:
            return hit
        lv = min(self._level[lower], self._level[upper])
        l0, l1 = self._cofactors(lower, lv)
        u0, u1 = self._cofactors(upper, lv)
        c0, r0 = self._isop(self.and_(l0, self.not_(u1)), u0)
        c1, r1 = self._isop(self.and_(l1, self.not_(u0)), u1)
        rest = self.or_(self.and_(l0, self.not_(r0)), self.and_(l1, self.not_(r1)))
        cs, rs = self._isop(rest, self.and_(u0, u1))
        node = self.or_(self._mk(lv, r0, r1), rs)
        fl = lv >> 1
        cover = (
            tuple(((fl, False),) + c for c in c0)
            + tuple(((fl, True),) + c for c in c1)
            + cs
        )
        if len(cover) > self.normal_form_cap:
            raise TooManyWorlds("normal form exceeds the output cap")
        out = (cover, node)
        self._isop_cache[key] = out
        return out

    def constituents(self, f: int) -> list[tuple[Literal, ...]]:
        """Prime, irredundant DNF of ``f`` as sorted literal tuples."""
        cover, node = self._isop(f, f)
        assert node == f
        return [tuple(Literal(a, b) for a, b in sorted(c)) for c in cover]

    def clauses(self, f: int) -> list[tuple[Literal, ...]]:
        """Prime, irredundant CNF of ``f`` as sorted literal tuples."""
        g = self.not_(f)
        cover, node = self._isop(g, g)
        assert node == g
        return [tuple(Literal(a, not b) for a, b in sorted(c)) for c in cover]

    # ------------------------------------------------------------------
    # text syntax

    def lit_name(self, lit: Literal) -> str:
        name = self.names[lit.fluent]
        return name if lit.positive else f"(not {name})"

    def parse_literal(self, text: str) -> Literal:
        text = text.strip()
        if text.startswith("(") and text.endswith(")"):
            inner = text[1:-1].split()
            if len(inner) == 2 and inner[0] == "not":
                return ~self.parse_literal(inner[1])
            raise ValueError(f"not a literal: {text}")
        if text.startswith("~") or text.startswith("!") or text.startswith("-"):
            return ~self.parse_literal(text[1:])
        if text not in self.index:
            raise KeyError(f"undeclared fluent {text!r}")
        return Literal(self.index[text])

    def to_text(self, f: Formula, form: str = "cnf") -> str:
        if f.is_true:
            return "(and)"
        if f.is_false:
            return "(or)"
        if form == "cnf":
            parts = [self._group("or", c) for c in self.clauses(f.node)]
            return parts[0] if len(parts) == 1 else "(and " + " ".join(parts) + ")"
        parts = [self._group("and", c) for c in self.constituents(f.node)]
        return parts[0] if len(parts) == 1 else "(or " + " ".join(parts) + ")"

    def _group(self, op: str, lits: Sequence[Literal]) -> str:
        names = [self.lit_name(l) for l in lits]
        return names[0] if len(names) == 1 else f"({op} " + " ".join(names) + ")"

    def parse(self, text: str) -> Formula:
        from .sexpr import read_one

        return self.build(read_one(text))

    def build(self, expr) -> Formula:
        """Build a formula from a parsed s-expression (see :mod:`sexpr`)."""
        from .sexpr import Atom, SExprError

        if isinstance(expr, Atom):
            if expr.value in ("true", "and"):
                return self.true
            if expr.value in ("false", "or"):
                return self.false
            if expr.value not in self.index:
                raise SExprError(f"undeclared fluent {expr.value!r}", expr.line, expr.col)
            return self.literal(Literal(self.index[expr.value]))
        if not expr.items:
            raise SExprError("empty formula", expr.line, expr.col)
        head = expr.items[0]
        if not isinstance(head, Atom):
            raise SExprError("expected an operator", expr.line, expr.col)
        args = [self.build(x) for x in expr.items[1:]]
        op = head.value
        if op == "and":
            return self.conj_all(args)
        if op == "or":
            return self.disj_all(args)
        if op == "not":
            if len(args) != 1:
                raise SExprError("not takes one argument", head.line, head.col)
            return ~args[0]
        if op == "oneof":
            return self.exactly_one(args)
        if op in ("imply", "implies"):
            if len(args) != 2:
                raise SExprError("imply takes two arguments", head.line, head.col)
            return ~args[0] | args[1]
        raise SExprError(f"unknown connective {op!r}", head.line, head.col)


# ----------------------------------------------------------------------
# functional interface


def conj(a: Formula, b: Formula) -> Formula:
    return a & b


def disj(a: Formula, b: Formula) -> Formula:
    return a | b


def neg(a: Formula) -> Formula:
    return ~a


def entails(a: Formula, b: Formula) -> bool:
    return a.entails(b)


def models(f: Formula, restrict: Iterable[int] | None = None) -> Iterator[State]:
    return f.models(restrict)


def count_models(f: Formula) -> int:
    return f.count()


def to_clauses(f: Formula) -> list[tuple[Literal, ...]]:
    return f.clauses()


def to_constituents(f: Formula) -> list[tuple[Literal, ...]]:
    return f.constituents()


def all_states(n: int) -> Iterator[State]:
    return itertools.product((False, True), repeat=n)
