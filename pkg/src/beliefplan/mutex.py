"""Mutual exclusion between planning-graph elements.

Two independent implementations live here:

* set-based rules for a single planning graph (one world, or the
  aggregate state), and
* labelled rules for the labelled uncertainty graph, where a mutex carries
  the set of worlds in which it holds.  Same-world mutexes use a formula
  over the fluents; intersect/cross-world mutexes use a relation between
  the world of the first element (unprimed fluents) and the world of the
  second element (primed fluents).

The depth of reasoning is controlled by :class:`MutexScheme`:
``NX`` none, ``StX`` static interference (plus complementary literals and
effects inheriting action mutexes), ``DyX`` adds competing needs and
inconsistent support, ``FX`` adds induced effect mutexes.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from itertools import combinations
from typing import TYPE_CHECKING, Iterable

from .formula import FALSE, FormulaStore, Literal

if TYPE_CHECKING:
    from .graphs import GraphDomain


class Depth(enum.IntEnum):
    NX = 0
    StX = 1
    DyX = 2
    FX = 3


class Worlds(enum.Enum):
    SAME = "sx"
    INTERSECT = "ix"
    CROSS = "cross"


@dataclass(frozen=True)
class MutexScheme:
    depth: Depth = Depth.NX
    worlds: Worlds = Worlds.SAME

    @property
    def enabled(self) -> bool:
        return self.depth > Depth.NX

    @classmethod
    def parse(cls, text: str | None) -> MutexScheme:
        """``nx``, ``stx``, ``dyx``, ``fx`` with optional ``-sx``/``-ix``/``-cross``."""
        if not text:
            return cls()
        depth, _, worlds = text.lower().partition("-")
        depths = {"nx": Depth.NX, "stx": Depth.StX, "dyx": Depth.DyX, "fx": Depth.FX}
        if depth not in depths:
            raise ValueError(f"unknown mutex depth {depth!r}")
        w = {"": Worlds.SAME, "sx": Worlds.SAME, "ix": Worlds.INTERSECT, "cross": Worlds.CROSS, "cx": Worlds.CROSS}
        if worlds not in w:
            raise ValueError(f"unknown world pairing {worlds!r}")
        return cls(depths[depth], w[worlds])

    def __str__(self) -> str:
        if not self.enabled:
            return "nx"
        return f"{self.depth.name.lower()}-{self.worlds.value}"


NONE = MutexScheme()


def _inconsistent(a: Iterable[Literal], b: Iterable[Literal]) -> bool:
    sb = set(b)
    return any(~l in sb for l in a)


def actions_interfere(dom: GraphDomain, a: int, b: int) -> bool:
    """Static interference between two graph actions."""
    x, y = dom.actions[a], dom.actions[b]
    ex, ey = x.effects[0].consequent, y.effects[0].consequent
    return (
        _inconsistent(ex, y.pre)
        or _inconsistent(x.pre, ey)
        or _inconsistent(ex, ey)
        or _inconsistent(x.pre, y.pre)
    )


def effects_interfere(dom: GraphDomain, e: tuple[int, int], f: tuple[int, int]) -> bool:
    x = dom.actions[e[0]].effects[e[1]]
    y = dom.actions[f[0]].effects[f[1]]
    return (
        _inconsistent(x.consequent, y.antecedent)
        or _inconsistent(x.antecedent, y.consequent)
        or _inconsistent(x.consequent, y.consequent)
        or _inconsistent(x.antecedent, y.antecedent)
    )


def _pair(x, y):
    return frozenset((x, y))


# ----------------------------------------------------------------------
# single graph, set based


def sg_action_mutexes(dom, actions, lit_mx: set, depth: Depth) -> set:
    out = set()
    if depth == Depth.NX:
        return out
    acts = sorted(actions)
    for a, b in combinations(acts, 2):
        if actions_interfere(dom, a, b):
            out.add(_pair(a, b))
            continue
        if depth >= Depth.DyX:
            pa, pb = dom.actions[a].pre, dom.actions[b].pre
            if any(_pair(l, m) in lit_mx for l in pa for m in pb if l != m):
                out.add(_pair(a, b))
    return out


def sg_effect_mutexes(dom, effects, lit_mx: set, act_mx: set, depth: Depth) -> set:
    out = set()
    if depth == Depth.NX:
        return out
    effs = sorted(effects)
    for e, f in combinations(effs, 2):
        if e[0] == f[0]:
            continue
        if _pair(e[0], f[0]) in act_mx or effects_interfere(dom, e, f):
            out.add(_pair(e, f))
            continue
        if depth >= Depth.DyX:
            ra = dom.effect(e).antecedent
            rb = dom.effect(f).antecedent
            if any(_pair(l, m) in lit_mx for l in ra for m in rb if l != m):
                out.add(_pair(e, f))
    if depth >= Depth.FX:
        by_action: dict[int, list] = {}
        for e in effs:
            by_action.setdefault(e[0], []).append(e)
        induced = set()
        for pair in out:
            e, f = tuple(pair)
            for src, other in ((e, f), (f, e)):
                for g in by_action[src[0]]:
                    if g != src and g[0] != other[0]:
                        induced.add(_pair(g, other))
        out |= induced
    return out


def sg_literal_mutexes(dom, literals, effects, eff_mx: set, depth: Depth) -> set:
    out = set()
    if depth == Depth.NX:
        return out
    lits = sorted(literals)
    for l in lits:
        if ~l in literals and l.positive:
            out.add(_pair(l, ~l))
    if depth < Depth.DyX:
        return out
    support = {l: [e for e in dom.achievers.get(l, ()) if e in effects] for l in lits}
    for l, m in combinations(lits, 2):
        if _pair(l, m) in out:
            continue
        ok = False
        for e in support[l]:
            for f in support[m]:
                if e == f or _pair(e, f) not in eff_mx:
                    ok = True
                    break
            if ok:
                break
        if not ok:
            out.add(_pair(l, m))
    return out


# ----------------------------------------------------------------------
# labelled uncertainty graph


class WorldLabels:
    """Mutex labels as formulas over the (single) world of both elements."""

    def __init__(self, store: FormulaStore, bsp: int):
        self.s = store
        self.top = bsp
        self.bsp = bsp

    def pair(self, x: int, y: int) -> int:
        return self.s.and_(x, y)

    def complementary(self, x: int, y: int) -> int:
        return self.s.and_(x, y)

    def restrict(self, m: int, x: int, y: int) -> int:
        return m

    def transpose(self, m: int) -> int:
        return m

    def first(self, x: int) -> int:
        """Constrain the first element's world to ``x``."""
        return self.s.and_(x, self.bsp)

    def diagonal(self, m: int) -> int:
        return m


class PairLabels:
    """Mutex labels as relations: first element in world X, second in X'."""

    def __init__(self, store: FormulaStore, bsp: int, intersect: bool):
        self.s = store
        self.bsp = bsp
        self.top = store.and_(bsp, store.prime(bsp))
        self.intersect = intersect
        self.ident = store.identity_relation()

    def pair(self, x: int, y: int) -> int:
        return self.s.and_(x, self.s.prime(y))

    def complementary(self, x: int, y: int) -> int:
        return self.s.and_(self.pair(x, y), self.ident)

    def restrict(self, m: int, x: int, y: int) -> int:
        if not self.intersect or m == FALSE:
            return m
        both = self.s.and_(x, y)
        return self.s.and_(m, self.pair(both, both))

    def transpose(self, m: int) -> int:
        return self.s.swap(m)

    def first(self, x: int) -> int:
        return self.s.and_(self.s.and_(x, self.bsp), self.s.prime(self.bsp))

    def diagonal(self, m: int) -> int:
        return self.s.diagonal(m)


def labels_for(store: FormulaStore, bsp: int, scheme: MutexScheme):
    if scheme.worlds == Worlds.SAME:
        return WorldLabels(store, bsp)
    return PairLabels(store, bsp, scheme.worlds == Worlds.INTERSECT)


def _get(mx: dict, alg, x, y) -> int:
    if x < y:
        return mx.get((x, y), FALSE)
    m = mx.get((y, x), FALSE)
    return alg.transpose(m) if m != FALSE else FALSE


def lug_action_mutexes(dom, alg, act_lab: dict, lit_mx: dict, depth: Depth) -> dict:
    s = alg.s
    out: dict = {}
    if depth == Depth.NX:
        return out
    acts = sorted(act_lab)
    for a, b in combinations(acts, 2):
        m = FALSE
        if actions_interfere(dom, a, b):
            m = alg.top
        elif depth >= Depth.DyX and lit_mx:
            cn = FALSE
            for l in dom.actions[a].pre:
                for k in dom.actions[b].pre:
                    if l != k:
                        cn = s.or_(cn, _get(lit_mx, alg, l, k))
            if cn != FALSE:
                m = s.and_(alg.pair(act_lab[a], act_lab[b]), cn)
        m = alg.restrict(m, act_lab[a], act_lab[b])
        if m != FALSE:
            out[(a, b)] = m
    return out


def lug_effect_mutexes(dom, alg, eff_lab: dict, lit_mx: dict, act_mx: dict, depth: Depth) -> dict:
    s = alg.s
    out: dict = {}
    if depth == Depth.NX:
        return out
    effs = sorted(eff_lab)
    for e, f in combinations(effs, 2):
        if e[0] == f[0]:
            continue
        m = _get(act_mx, alg, e[0], f[0])
        if effects_interfere(dom, e, f):
            m = alg.top
        elif depth >= Depth.DyX and lit_mx:
            cn = FALSE
            for l in dom.effect(e).antecedent:
                for k in dom.effect(f).antecedent:
                    if l != k:
                        cn = s.or_(cn, _get(lit_mx, alg, l, k))
            if cn != FALSE:
                m = s.or_(m, s.and_(alg.pair(eff_lab[e], eff_lab[f]), cn))
        m = alg.restrict(m, eff_lab[e], eff_lab[f])
        if m != FALSE:
            out[(e, f)] = m
    if depth >= Depth.FX and out:
        by_action: dict[int, list] = {}
        for e in effs:
            by_action.setdefault(e[0], []).append(e)
        extra: dict = {}
        for (e, f), m in out.items():
            # the induced effect g of the same action as e (or f) is mutex in the
            # worlds where e is mutex and both g and e are reachable
            for g in by_action[e[0]]:
                if g == e or g[0] == f[0]:
                    continue
                lab = s.and_(m, alg.first(s.and_(eff_lab[g], eff_lab[e])))
                key, lab = ((g, f), lab) if g < f else ((f, g), alg.transpose(lab))
                extra[key] = s.or_(extra.get(key, FALSE), lab)
            mt = alg.transpose(m)
            for g in by_action[f[0]]:
                if g == f or g[0] == e[0]:
                    continue
                lab = s.and_(mt, alg.first(s.and_(eff_lab[g], eff_lab[f])))
                key, lab = ((g, e), lab) if g < e else ((e, g), alg.transpose(lab))
                extra[key] = s.or_(extra.get(key, FALSE), lab)
        for key, lab in extra.items():
            lab = alg.restrict(lab, eff_lab[key[0]], eff_lab[key[1]])
            if lab != FALSE:
                out[key] = s.or_(out.get(key, FALSE), lab)
    return out


def lug_literal_mutexes(dom, alg, lit_lab: dict, eff_lab: dict, eff_mx: dict, depth: Depth) -> dict:
    s = alg.s
    out: dict = {}
    if depth == Depth.NX:
        return out
    lits = sorted(lit_lab)
    support = {
        l: [e for e in dom.achievers.get(l, ()) if e in eff_lab] for l in lits
    }
    for l, k in combinations(lits, 2):
        m = FALSE
        if k == ~l:
            m = alg.complementary(lit_lab[l], lit_lab[k])
        if depth >= Depth.DyX:
            ok = FALSE
            for e in support[l]:
                for f in support[k]:
                    both = alg.pair(eff_lab[e], eff_lab[f])
                    if e != f:
                        both = s.and_(both, s.not_(_get(eff_mx, alg, e, f)))
                    ok = s.or_(ok, both)
            bad = s.and_(alg.pair(lit_lab[l], lit_lab[k]), s.not_(ok))
            m = s.or_(m, bad)
        m = alg.restrict(m, lit_lab[l], lit_lab[k])
        if m != FALSE:
            out[(l, k)] = m
    return out


# ----------------------------------------------------------------------
# public accessors


def _graph_mutexes(graph, k: int, kind: str, scheme: MutexScheme | None):
    if scheme is not None and scheme != graph.scheme:
        if not scheme.enabled and not graph.scheme.enabled:
            return {} if hasattr(graph, "labels") else set()
        raise ValueError(f"graph was built with mutex scheme {graph.scheme}, not {scheme}")
    return graph.mutexes(kind, k)


def action_mutexes(graph, k: int, scheme: MutexScheme | None = None):
    """Action mutexes at level ``k`` of a built graph.

    Single graphs return a set of unordered pairs; labelled graphs return a
    dict from ordered pairs to :class:`~beliefplan.formula.Formula` labels.
    """
    return _graph_mutexes(graph, k, "action", scheme)


def effect_mutexes(graph, k: int, scheme: MutexScheme | None = None):
    return _graph_mutexes(graph, k, "effect", scheme)


def literal_mutexes(graph, k: int, scheme: MutexScheme | None = None):
    return _graph_mutexes(graph, k, "literal", scheme)
