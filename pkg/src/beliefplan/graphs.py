"""Planning graphs over belief states.

* :class:`SingleGraph` is a classical planning graph with conditional
  effects, built from one set of literals (a sampled state or the union of
  literals of a belief state).
* :class:`GraphSet` holds one single graph per chosen world.
* :class:`LUG` is the labelled uncertainty graph: one graph whose elements
  carry the set of worlds (a formula) from which they are reachable.
"""
from __future__ import annotations

import math
import random
import time
import weakref
from dataclasses import dataclass
from typing import Iterable, Sequence

from .formula import FALSE, Formula, Literal
from .model import Effect, Problem
from .mutex import (
    NONE,
    Depth,
    MutexScheme,
    labels_for,
    lug_action_mutexes,
    lug_effect_mutexes,
    lug_literal_mutexes,
    sg_action_mutexes,
    sg_effect_mutexes,
    sg_literal_mutexes,
)

LEVEL_CAP = 128
INF = math.inf

EffectRef = tuple  # (action index, effect index)


@dataclass(frozen=True)
class GraphAction:
    index: int
    name: str
    pre: tuple[Literal, ...]
    effects: tuple[Effect, ...]
    persists: Literal | None = None

    @property
    def is_persistence(self) -> bool:
        return self.persists is not None


class GraphDomain:
    """Causative actions of a problem plus one persistence per literal."""

    def __init__(self, problem: Problem):
        self.problem = problem
        self.store = problem.store
        acts: list[GraphAction] = []
        for a in problem.actions:
            if a.causative:
                acts.append(GraphAction(len(acts), a.name, a.precondition, a.effects))
        self.n_real = len(acts)
        self.persistence: dict[Literal, int] = {}
        for fl in range(problem.store.n):
            for pos in (True, False):
                lit = Literal(fl, pos)
                self.persistence[lit] = len(acts)
                acts.append(
                    GraphAction(len(acts), f"persist {problem.lit_name(lit)}", (lit,), (Effect((), (lit,)),), lit)
                )
        self.actions = acts
        self.achievers: dict[Literal, list[EffectRef]] = {}
        for a in acts:
            for j, e in enumerate(a.effects):
                for l in e.consequent:
                    self.achievers.setdefault(l, []).append((a.index, j))
        self.all_literals = sorted(self.persistence)
        self._sg_cache: dict = {}

    def effect(self, ref: EffectRef) -> Effect:
        return self.actions[ref[0]].effects[ref[1]]

    def effect_name(self, ref: EffectRef) -> str:
        a = self.actions[ref[0]]
        return a.name if a.is_persistence else f"{a.name}.{ref[1]}"

    def action_named(self, name: str) -> int:
        for a in self.actions:
            if a.name == name:
                return a.index
        raise KeyError(name)


_domains: "weakref.WeakKeyDictionary[Problem, GraphDomain]" = weakref.WeakKeyDictionary()


def domain_of(problem: Problem) -> GraphDomain:
    dom = _domains.get(problem)
    if dom is None:
        dom = GraphDomain(problem)
        _domains[problem] = dom
    return dom


# ----------------------------------------------------------------------
# belief state helpers


def aggregate_state(bs: Formula) -> set[Literal]:
    """Union of the literals of the constituents of ``bs``."""
    if bs.is_false:
        raise ValueError("the empty belief state has no aggregate state")
    return {l for cube in bs.constituents() for l in cube}


def state_literals(state: Sequence[bool]) -> frozenset[Literal]:
    return frozenset(Literal(i, bool(v)) for i, v in enumerate(state))


def sample_states(bs: Formula, fraction: float = 1.0, seed: int | None = 0) -> list[tuple[bool, ...]]:
    """``ceil(fraction * |M(bs)|)`` distinct models, uniformly without replacement."""
    if bs.is_false:
        raise ValueError("cannot sample from an empty belief state")
    if not 0 < fraction <= 1:
        raise ValueError("fraction must lie in (0, 1]")
    states = list(bs.models())
    if fraction >= 1:
        return states
    k = max(1, math.ceil(fraction * len(states)))
    picks = sorted(random.Random(seed).sample(range(len(states)), k))
    return [states[i] for i in picks]


# ----------------------------------------------------------------------
# single graphs


class GraphTimeout(RuntimeError):
    pass


class SingleGraph:
    """Classical planning graph from a set of initial literals.

    Layers are stored cumulatively: ``lit_level[l]`` is the first level at
    which ``l`` appears, and level ``last`` is the fixpoint.  Queries past
    ``last`` read the fixpoint layer.
    """

    def __init__(self, dom: GraphDomain, init: Iterable[Literal], scheme: MutexScheme = NONE,
                 level_cap: int = LEVEL_CAP, deadline: float | None = None):
        self.dom = dom
        self.init = frozenset(init)
        if not self.init:
            raise ValueError("a planning graph needs a nonempty initial layer")
        self.scheme = scheme if scheme.enabled else NONE
        depth = self.scheme.depth
        self.lit_level: dict[Literal, int] = {l: 0 for l in self.init}
        self.act_level: dict[int, int] = {}
        self.eff_level: dict[EffectRef, int] = {}
        self.lit_mx: list[set] = [sg_literal_mutexes(dom, self.init, (), set(), min(depth, Depth.StX))]
        self.act_mx: list[set] = []
        self.eff_mx: list[set] = []
        self.truncated = False
        lits = set(self.init)
        k = 0
        while True:
            if deadline is not None and time.monotonic() > deadline:
                raise GraphTimeout("planning graph construction timed out")
            acts = set()
            effs = set()
            for a in dom.actions:
                if all(l in lits for l in a.pre):
                    acts.add(a.index)
                    self.act_level.setdefault(a.index, k)
                    for j, e in enumerate(a.effects):
                        if all(l in lits for l in e.antecedent):
                            effs.add((a.index, j))
                            self.eff_level.setdefault((a.index, j), k)
            amx = sg_action_mutexes(dom, acts, self.lit_mx[k], depth)
            emx = sg_effect_mutexes(dom, effs, self.lit_mx[k], amx, depth)
            self.act_mx.append(amx)
            self.eff_mx.append(emx)
            new = set(lits)
            for ref in effs:
                new.update(dom.effect(ref).consequent)
            lmx = sg_literal_mutexes(dom, new, effs, emx, depth)
            if new == lits and lmx == self.lit_mx[k]:
                self.last = k
                break
            if k + 1 >= level_cap:
                self.last = k
                self.truncated = True
                break
            for l in new - lits:
                self.lit_level[l] = k + 1
            lits = new
            self.lit_mx.append(lmx)
            k += 1

    def _lvl(self, k: int) -> int:
        return min(k, self.last)

    def literals(self, k: int) -> set[Literal]:
        return {l for l, v in self.lit_level.items() if v <= k}

    def actions(self, k: int) -> set[int]:
        return {a for a, v in self.act_level.items() if v <= k}

    def effects(self, k: int) -> set[EffectRef]:
        return {e for e, v in self.eff_level.items() if v <= k}

    def level(self, lit: Literal) -> float:
        return self.lit_level.get(lit, INF)

    def mutex(self, kind: str, k: int, x, y) -> bool:
        return frozenset((x, y)) in self.mutexes(kind, k)

    def mutexes(self, kind: str, k: int) -> set:
        table = {"literal": self.lit_mx, "action": self.act_mx, "effect": self.eff_mx}[kind]
        return table[self._lvl(k)] if table else set()

    def lit_mutex(self, k: int, l: Literal, m: Literal) -> bool:
        return frozenset((l, m)) in self.lit_mx[self._lvl(k)]

    def dump(self) -> str:
        return _dump_single(self)


def build_single(init: Iterable[Literal], problem: Problem, with_mutexes: bool | MutexScheme = False,
                 **kw) -> SingleGraph:
    scheme = _scheme(with_mutexes)
    return SingleGraph(domain_of(problem), init, scheme, **kw)


def _scheme(with_mutexes) -> MutexScheme:
    if isinstance(with_mutexes, MutexScheme):
        return MutexScheme(with_mutexes.depth) if with_mutexes.enabled else NONE
    if isinstance(with_mutexes, str):
        return MutexScheme(MutexScheme.parse(with_mutexes).depth)
    return MutexScheme(Depth.DyX) if with_mutexes else NONE


def state_graph(problem: Problem, state: Sequence[bool], scheme: MutexScheme = NONE, **kw) -> SingleGraph:
    """Single graph from one world, memoised per problem."""
    dom = domain_of(problem)
    scheme = _scheme(scheme)
    key = (tuple(state), scheme)
    g = dom._sg_cache.get(key)
    if g is None:
        g = SingleGraph(dom, state_literals(state), scheme, **kw)
        dom._sg_cache[key] = g
    return g


@dataclass
class GraphSet:
    states: list[tuple[bool, ...]]
    graphs: list[SingleGraph]

    def __len__(self) -> int:
        return len(self.graphs)

    def __iter__(self):
        return iter(self.graphs)


def build_mg(bs_p: Formula, problem: Problem, fraction: float = 1.0, seed: int | None = 0,
             with_mutexes: bool | MutexScheme = False, **kw) -> GraphSet:
    states = sample_states(bs_p, fraction, seed)
    scheme = _scheme(with_mutexes)
    return GraphSet(states, [state_graph(problem, s, scheme, **kw) for s in states])


# ----------------------------------------------------------------------
# labelled uncertainty graph


class LUG:
    """Labelled uncertainty graph seeded with the belief state ``bsp``.

    ``lits[k]``, ``acts[k]`` and ``effs[k]`` map present elements to label
    nodes of the shared store.  Mutex tables map ordered element pairs to
    label nodes (formulas or world-pair relations, see :mod:`mutex`).
    """

    def __init__(self, problem: Problem, bsp: Formula, scheme: MutexScheme = NONE,
                 level_cap: int = LEVEL_CAP, deadline: float | None = None):
        if bsp.is_false:
            raise ValueError("cannot build a graph from an empty belief state")
        self.problem = problem
        self.dom = dom = domain_of(problem)
        self.store = s = problem.store
        self.bsp = bsp
        self.scheme = scheme if scheme.enabled else NONE
        depth = self.scheme.depth
        self.alg = alg = labels_for(s, bsp.node, self.scheme)
        b = bsp.node
        lits0 = {}
        for l in dom.all_literals:
            lab = s.and_(s._lit_node(l), b)
            if lab != FALSE:
                lits0[l] = lab
        self.lits: list[dict] = [lits0]
        self.acts: list[dict] = []
        self.effs: list[dict] = []
        self.lit_mx: list[dict] = [lug_literal_mutexes(dom, alg, lits0, {}, {}, min(depth, Depth.StX))]
        self.act_mx: list[dict] = []
        self.eff_mx: list[dict] = []
        self.truncated = False
        k = 0
        while True:
            if deadline is not None and time.monotonic() > deadline:
                raise GraphTimeout("labelled graph construction timed out")
            L = self.lits[k]
            acts, effs = {}, {}
            for a in dom.actions:
                lab = b
                for l in a.pre:
                    lab = s.and_(lab, L.get(l, FALSE))
                    if lab == FALSE:
                        break
                if lab == FALSE:
                    continue
                acts[a.index] = lab
                for j, e in enumerate(a.effects):
                    el = lab
                    for l in e.antecedent:
                        el = s.and_(el, L.get(l, FALSE))
                        if el == FALSE:
                            break
                    if el != FALSE:
                        effs[(a.index, j)] = el
            amx = lug_action_mutexes(dom, alg, acts, self.lit_mx[k], depth)
            emx = lug_effect_mutexes(dom, alg, effs, self.lit_mx[k], amx, depth)
            self.acts.append(acts)
            self.effs.append(effs)
            self.act_mx.append(amx)
            self.eff_mx.append(emx)
            nxt: dict = {}
            for ref, lab in effs.items():
                for l in dom.effect(ref).consequent:
                    nxt[l] = s.or_(nxt.get(l, FALSE), lab)
            lmx = lug_literal_mutexes(dom, alg, nxt, effs, emx, depth)
            if nxt == L and lmx == self.lit_mx[k]:
                self.last = k
                break
            if k + 1 >= level_cap:
                self.last = k
                self.truncated = True
                break
            self.lits.append(nxt)
            self.lit_mx.append(lmx)
            k += 1

    # -- label access ---------------------------------------------------
    def _lvl(self, k: int) -> int:
        return min(k, self.last)

    def lit_node(self, lit: Literal, k: int) -> int:
        return self.lits[self._lvl(k)].get(lit, FALSE)

    def act_node(self, a: int, k: int) -> int:
        return self.acts[self._lvl(k)].get(a, FALSE)

    def eff_node(self, ref: EffectRef, k: int) -> int:
        return self.effs[self._lvl(k)].get(ref, FALSE)

    def literal_label(self, lit: Literal, k: int) -> Formula:
        return Formula(self.store, self.lit_node(lit, k))

    def action_label(self, a: int | str, k: int) -> Formula:
        if isinstance(a, str):
            a = self.dom.action_named(a)
        return Formula(self.store, self.act_node(a, k))

    def effect_label(self, ref: EffectRef, k: int) -> Formula:
        return Formula(self.store, self.eff_node(ref, k))

    @property
    def labels(self):
        return self.lits

    def mutexes(self, kind: str, k: int) -> dict:
        table = {"literal": self.lit_mx, "action": self.act_mx, "effect": self.eff_mx}[kind]
        return {key: Formula(self.store, v) for key, v in table[self._lvl(k)].items()}

    def mutex_node(self, kind: str, k: int, x, y) -> int:
        table = {"literal": self.lit_mx, "action": self.act_mx, "effect": self.eff_mx}[kind]
        mx = table[self._lvl(k)]
        if x < y:
            return mx.get((x, y), FALSE)
        m = mx.get((y, x), FALSE)
        return self.alg.transpose(m) if m != FALSE else FALSE

    def same_world_mutex(self, kind: str, k: int, x, y) -> Formula:
        """Worlds in which ``x`` and ``y`` are mutex (diagonal of pair labels)."""
        return Formula(self.store, self.alg.diagonal(self.mutex_node(kind, k, x, y)))

    # -- extended labels ---------------------------------------------------
    def extended_node(self, k: int, cubes: Iterable[Iterable[Literal]]) -> int:
        s = self.store
        out = FALSE
        for cube in cubes:
            lab = self.bsp.node
            for l in cube:
                lab = s.and_(lab, self.lit_node(l, k))
                if lab == FALSE:
                    break
            out = s.or_(out, lab)
        return out

    def clause_node(self, k: int, clause: Iterable[Literal]) -> int:
        s = self.store
        out = FALSE
        for l in clause:
            out = s.or_(out, self.lit_node(l, k))
        return out

    def dump(self) -> str:
        return _dump_lug(self)


def build_lug(bs_p: Formula, problem: Problem, mutex_scheme: MutexScheme | str | None = None,
              fraction: float = 1.0, seed: int | None = 0, **kw) -> LUG:
    if isinstance(mutex_scheme, str) or mutex_scheme is None:
        mutex_scheme = MutexScheme.parse(mutex_scheme)
    if fraction < 1:
        states = sample_states(bs_p, fraction, seed)
        bs_p = problem.store.disj_all(problem.store.state(st) for st in states)
    return LUG(problem, bs_p, mutex_scheme, **kw)


def extended_label(lug: LUG, k: int, f) -> Formula:
    """Substitute literal labels at level ``k`` into ``f``.

    ``f`` may be a formula handle (its prime DNF is used) or text in the
    formula syntax, which is rewritten as written (and/or/not over literals).
    """
    s = lug.store
    if isinstance(f, Formula):
        if f.is_true:
            return lug.bsp
        return Formula(s, lug.extended_node(k, f.constituents()))
    from .sexpr import Atom, read_one

    def walk(e, negated=False) -> int:
        if isinstance(e, Atom):
            if e.value in ("true", "false"):
                truth = (e.value == "true") != negated
                return lug.bsp.node if truth else FALSE
            return lug.lit_node(Literal(s.index[e.value], not negated), k)
        op = e.head()
        args = e.items[1:]
        if op == "not":
            return walk(args[0], not negated)
        if (op == "and") != negated:
            out = lug.bsp.node
            for a in args:
                out = s.and_(out, walk(a, negated))
            return out
        if op in ("and", "or"):
            out = FALSE
            for a in args:
                out = s.or_(out, walk(a, negated))
            return out
        raise ValueError(f"extended labels are defined for and/or/not formulas, got {op!r}")

    return Formula(s, walk(read_one(f)))


# ----------------------------------------------------------------------
# text dumps


def _dump_single(g: SingleGraph) -> str:
    dom, p = g.dom, g.dom.problem
    rows = []
    for k in range(g.last + 1):
        for l in sorted(g.literals(k)):
            if g.lit_level[l] == k:
                rows.append(f"{k}\tliteral\t{p.lit_name(l)}\ttrue")
        for a in sorted(g.actions(k)):
            if g.act_level[a] == k:
                rows.append(f"{k}\taction\t{dom.actions[a].name}\ttrue")
        for e in sorted(g.effects(k)):
            if g.eff_level[e] == k:
                rows.append(f"{k}\teffect\t{dom.effect_name(e)}\ttrue")
    return "\n".join(rows)


def _dump_lug(g: LUG) -> str:
    dom, p, s = g.dom, g.problem, g.store
    rows = []
    for k in range(g.last + 1):
        for l, lab in sorted(g.lits[k].items()):
            rows.append(f"{k}\tliteral\t{p.lit_name(l)}\t{s.to_text(Formula(s, lab))}")
        for a, lab in sorted(g.acts[k].items()):
            rows.append(f"{k}\taction\t{dom.actions[a].name}\t{s.to_text(Formula(s, lab))}")
        for e, lab in sorted(g.effs[k].items()):
            rows.append(f"{k}\teffect\t{dom.effect_name(e)}\t{s.to_text(Formula(s, lab))}")
    return "\n".join(rows)
