"""Belief-state distance estimates built on planning graphs."""
from __future__ import annotations

import enum
from collections import OrderedDict
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from .formula import FALSE, Formula, Literal
from .graphs import (
    INF,
    LUG,
    GraphSet,
    SingleGraph,
    aggregate_state,
    build_lug,
    build_mg,
    build_single,
    domain_of,
    sample_states,
    state_graph,
)
from .model import Problem
from .mutex import NONE, MutexScheme, Worlds


class Substrate(enum.Enum):
    NONE = "none"
    SG_UNION = "sg"
    SG_SAMPLE = "sg1"
    MG = "mg"
    LUG = "lug"


class Kind(enum.Enum):
    ZERO = "zero"
    CARD = "card"
    MAX = "max"
    SUM = "sum"
    LEVEL = "level"
    RP = "rp"
    RP_UNION = "rpu"


class Agg(enum.Enum):
    MAX = "max"
    SUM = "sum"
    UNION = "union"
    NA = "-"


class Direction(enum.Enum):
    REGRESSION = "regress"
    PROGRESSION = "progress"


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class HeuristicSpec:
    substrate: Substrate = Substrate.NONE
    kind: Kind = Kind.ZERO
    agg: Agg = Agg.NA
    scheme: MutexScheme = NONE
    fraction: float = 1.0
    seed: int = 0
    direction: Direction = Direction.PROGRESSION

    def __post_init__(self):
        _validate(self)

    def __str__(self) -> str:
        if self.substrate == Substrate.NONE:
            return self.kind.value
        parts = [self.substrate.value, self.kind.value]
        if self.agg in (Agg.MAX, Agg.SUM) and not (
            self.substrate == Substrate.LUG and self.agg == Agg.MAX
        ):
            parts.append(self.agg.value)
        if self.scheme.enabled:
            parts.append(str(self.scheme))
        return ":".join(parts)

    def with_direction(self, direction: Direction | str) -> HeuristicSpec:
        return replace(self, direction=Direction(direction))


def _validate(spec: HeuristicSpec) -> None:
    sub, kind, agg = spec.substrate, spec.kind, spec.agg
    if sub == Substrate.NONE:
        if kind not in (Kind.ZERO, Kind.CARD) or agg != Agg.NA:
            raise SpecError(f"{kind.value} needs a planning graph")
        return
    if kind in (Kind.ZERO, Kind.CARD):
        raise SpecError(f"{kind.value} does not use a planning graph")
    if sub in (Substrate.SG_UNION, Substrate.SG_SAMPLE):
        if kind == Kind.RP_UNION or agg != Agg.NA:
            raise SpecError("single-graph heuristics take no aggregation")
    elif sub == Substrate.MG:
        if kind == Kind.RP_UNION:
            if agg not in (Agg.UNION, Agg.NA):
                raise SpecError("the union relaxed plan takes no other aggregation")
        elif agg not in (Agg.MAX, Agg.SUM):
            raise SpecError("multiple-graph heuristics aggregate by max or sum")
        if spec.scheme.enabled and spec.scheme.worlds != Worlds.SAME:
            raise SpecError("multiple graphs only support same-world mutexes")
    elif sub == Substrate.LUG:
        if kind == Kind.RP_UNION:
            raise SpecError("the labelled graph has no union relaxed plan")
        if kind == Kind.RP and agg != Agg.NA:
            raise SpecError("the labelled relaxed plan takes no aggregation")
        if kind != Kind.RP and agg not in (Agg.MAX, Agg.SUM):
            raise SpecError("labelled graph heuristics aggregate by max or sum")
    if not 0 < spec.fraction <= 1:
        raise SpecError("sampling fraction must lie in (0, 1]")


def parse_spec(text: str, mutex: str | None = None, fraction: float = 1.0, seed: int = 0,
               direction: Direction | str = Direction.PROGRESSION) -> HeuristicSpec:
    """Parse strings such as ``lug:rp``, ``mg:rp:sum``, ``sg1:rp``, ``lug:level:fx-sx``."""
    toks = [t for t in text.strip().lower().split(":") if t]
    if not toks:
        raise SpecError("empty heuristic spec")
    scheme = MutexScheme.parse(mutex) if mutex else NONE
    last = toks[-1]
    if len(toks) > 1 and last.split("-")[0] in ("nx", "stx", "dyx", "fx"):
        try:
            scheme = MutexScheme.parse(last)
        except ValueError as exc:
            raise SpecError(str(exc)) from None
        toks = toks[:-1]
    head = toks[0]
    direction = Direction(direction)
    common = dict(scheme=scheme, fraction=fraction, seed=seed, direction=direction)
    if head in ("zero", "card"):
        if len(toks) != 1:
            raise SpecError(f"{head} takes no options")
        return HeuristicSpec(Substrate.NONE, Kind(head), Agg.NA, **common)
    subs = {s.value: s for s in Substrate if s != Substrate.NONE}
    if head not in subs:
        raise SpecError(f"unknown heuristic {head!r}")
    sub = subs[head]
    if len(toks) < 2:
        raise SpecError(f"{head} needs a kind, e.g. {head}:rp")
    kinds = {k.value: k for k in Kind if k not in (Kind.ZERO, Kind.CARD)}
    if toks[1] not in kinds:
        raise SpecError(f"unknown heuristic kind {toks[1]!r}")
    kind = kinds[toks[1]]
    agg = Agg.NA
    if len(toks) == 3:
        if toks[2] not in ("max", "sum"):
            raise SpecError(f"unknown aggregation {toks[2]!r}")
        agg = Agg(toks[2])
    elif len(toks) > 3:
        raise SpecError(f"too many fields in {text!r}")
    if len(toks) == 2:
        if sub == Substrate.MG and kind != Kind.RP_UNION:
            agg = Agg.MAX
        elif sub == Substrate.LUG and kind != Kind.RP:
            agg = Agg.MAX
        elif sub == Substrate.MG:
            agg = Agg.UNION
    if sub == Substrate.MG and kind == Kind.RP_UNION:
        agg = Agg.UNION if agg == Agg.NA else agg
    try:
        return HeuristicSpec(sub, kind, agg, **common)
    except SpecError:
        raise
    except ValueError as exc:
        raise SpecError(str(exc)) from None


# ----------------------------------------------------------------------
# relaxed plans


@dataclass
class RPLayer:
    actions: dict = field(default_factory=dict)  # action index -> need label node or None
    effects: dict = field(default_factory=dict)  # effect ref -> need label node or None


@dataclass
class RelaxedPlan:
    """Layers ``0..b-1`` of chosen actions/effects plus literal subgoals ``0..b``."""

    b: int
    layers: list[RPLayer]
    goals: list[dict]  # per level: literal or clause -> need label node (None for plain graphs)
    persistence: set = field(default_factory=set)

    def action_layers(self, include_persistence: bool = False) -> list[set]:
        return [
            {a for a in layer.actions if include_persistence or a not in self.persistence}
            for layer in self.layers
        ]

    @property
    def value(self) -> int:
        return sum(len(s) for s in self.action_layers())

    def names(self, problem: Problem) -> list[list[str]]:
        dom = domain_of(problem)
        return [sorted(dom.actions[a].name for a in s) for s in self.action_layers()]


def merge_plans(plans: Sequence[Sequence[set]], align: str = "start") -> list[set]:
    """Layer-wise union of action-layer sequences, aligned at the start or end."""
    if not plans:
        return []
    depth = max(len(p) for p in plans)
    out = [set() for _ in range(depth)]
    for p in plans:
        off = 0 if align == "start" else depth - len(p)
        for i, layer in enumerate(p):
            out[off + i] |= set(layer)
    return out


# ----------------------------------------------------------------------
# simple estimates


def h_zero(bs: Formula) -> int:
    return 0


def h_card(bs: Formula) -> int:
    return bs.count()


# ----------------------------------------------------------------------
# single graph estimates


def clause_cost(graph, clause: Iterable[Literal]) -> float:
    if isinstance(graph, LUG):
        return _lug_clause_cost(graph, tuple(clause))
    return min((graph.level(l) for l in clause), default=INF)


def constituent_level(graph, cube: Iterable[Literal]) -> float:
    cube = tuple(cube)
    if isinstance(graph, LUG):
        return _lug_level(graph, [cube])
    start = max((graph.level(l) for l in cube), default=0)
    if start == INF:
        return INF
    if not graph.scheme.enabled:
        return start
    pairs = [(l, m) for i, l in enumerate(cube) for m in cube[i + 1:]]
    for k in range(start, graph.last + 1):
        if not any(graph.lit_mutex(k, l, m) for l, m in pairs):
            return k
    return INF


def _best_constituent(graph: SingleGraph, bs_i: Formula):
    best, arg = INF, None
    for cube in bs_i.constituents():
        lev = constituent_level(graph, cube)
        if lev < best:
            best, arg = lev, cube
    return best, arg


def sg_relaxed_plan(graph: SingleGraph, bs_i: Formula) -> RelaxedPlan | None:
    b, cube = _best_constituent(graph, bs_i)
    if b == INF:
        return None
    dom = graph.dom
    b = int(b)
    goals: list[dict] = [dict() for _ in range(b + 1)]
    for l in cube:
        goals[b][l] = None
    layers = [RPLayer() for _ in range(b)]
    persist = set(dom.persistence.values())
    for r in range(b, 0, -1):
        layer = layers[r - 1]
        avail = graph.literals(r - 1)
        given: set = set()
        for l in sorted(goals[r]):
            if l in avail:
                p = dom.persistence[l]
                ref = (p, 0)
            elif l in given:
                continue
            else:
                cands = [
                    e for e in dom.achievers.get(l, ())
                    if e[0] not in persist and graph.eff_level.get(e, INF) <= r - 1
                ]
                if not cands:
                    raise RuntimeError("relaxed plan extraction found no support")
                ref = min(cands, key=lambda e: (graph.eff_level[e], graph.act_level[e[0]], e))
            if ref in layer.effects:
                continue
            layer.effects[ref] = None
            layer.actions[ref[0]] = None
            given.update(dom.effect(ref).consequent)
            for m in dom.actions[ref[0]].pre:
                goals[r - 1][m] = None
            for m in dom.effect(ref).antecedent:
                goals[r - 1][m] = None
    return RelaxedPlan(b, layers, goals, persist)


def sg_heuristic(graph: SingleGraph, bs_i: Formula, kind: Kind | str) -> float:
    kind = Kind(kind)
    if kind == Kind.MAX:
        return max((clause_cost(graph, c) for c in bs_i.clauses()), default=0)
    if kind == Kind.SUM:
        return sum((clause_cost(graph, c) for c in bs_i.clauses()), 0)
    if kind == Kind.LEVEL:
        return _best_constituent(graph, bs_i)[0]
    if kind == Kind.RP:
        rp = sg_relaxed_plan(graph, bs_i)
        return INF if rp is None else rp.value
    raise SpecError(f"kind {kind.value} is not a single-graph heuristic")


def mg_heuristic(graphs: GraphSet | Sequence[SingleGraph], bs_i: Formula, kind: Kind | str,
                 agg: Agg | str = Agg.MAX) -> float:
    agg = Agg(agg)
    vals = [sg_heuristic(g, bs_i, kind) for g in graphs]
    if agg == Agg.SUM:
        return sum(vals)
    return max(vals, default=0)


def mg_relaxed_plans(graphs, bs_i: Formula) -> list[RelaxedPlan | None]:
    return [sg_relaxed_plan(g, bs_i) for g in graphs]


def mg_rp_union(graphs, bs_i: Formula, direction: Direction | str = Direction.REGRESSION) -> float:
    direction = Direction(direction)
    plans = mg_relaxed_plans(graphs, bs_i)
    if any(p is None for p in plans):
        return INF
    align = "end" if direction == Direction.REGRESSION else "start"
    merged = merge_plans([p.action_layers() for p in plans], align)
    return sum(len(s) for s in merged)


# ----------------------------------------------------------------------
# labelled graph estimates


def _entailed_by_bsp(lug: LUG, node: int) -> bool:
    return lug.store.implies(lug.bsp.node, node)


def _lug_clause_cost(lug: LUG, clause: tuple) -> float:
    for k in range(lug.last + 1):
        if _entailed_by_bsp(lug, lug.clause_node(k, clause)):
            return k
    return INF


def _reach_node(lug: LUG, k: int, cube: tuple) -> int:
    """Worlds from which ``cube`` is reachable at ``k`` with no same-world mutex."""
    s = lug.store
    node = lug.extended_node(k, [cube])
    if node == FALSE or not lug.scheme.enabled:
        return node
    for i, l in enumerate(cube):
        for m in cube[i + 1:]:
            mx = lug.mutex_node("literal", k, l, m)
            if mx != FALSE:
                node = s.and_(node, s.not_(lug.alg.diagonal(mx)))
    return node


def _cross_ok(lug: LUG, k: int, cubes: list, reach: list) -> bool:
    """Every pair of distinct worlds has constituents reachable without cross mutex."""
    s = lug.store
    alg = lug.alg
    cover = FALSE
    for c1, r1 in zip(cubes, reach):
        if r1 == FALSE:
            continue
        for c2, r2 in zip(cubes, reach):
            if r2 == FALSE:
                continue
            ok = alg.pair(r1, r2)
            for l in c1:
                for m in c2:
                    if l != m:
                        mx = lug.mutex_node("literal", k, l, m)
                        if mx != FALSE:
                            ok = s.and_(ok, s.not_(mx))
            cover = s.or_(cover, ok)
    need = s.and_(alg.top, s.not_(alg.ident))
    return s.implies(need, cover)


def _lug_level_at(lug: LUG, k: int, cubes: list) -> bool:
    reach = [_reach_node(lug, k, c) for c in cubes]
    any_node = FALSE
    for r in reach:
        any_node = lug.store.or_(any_node, r)
    if not _entailed_by_bsp(lug, any_node):
        return False
    if lug.scheme.enabled and lug.scheme.worlds != Worlds.SAME:
        return _cross_ok(lug, k, cubes, reach)
    return True


def _lug_level(lug: LUG, cubes: list) -> float:
    for k in range(lug.last + 1):
        if _lug_level_at(lug, k, cubes):
            return k
    return INF


def _per_world(lug: LUG, fn) -> list[float]:
    return [fn(state) for state in lug.bsp.models()]


def lug_heuristic(lug: LUG, bs_i: Formula, kind: Kind | str, agg: Agg | str = Agg.MAX) -> float:
    kind, agg = Kind(kind), Agg(agg)
    if kind == Kind.RP:
        rp = lug_relaxed_plan(lug, bs_i)
        return INF if rp is None else rp.value
    if kind in (Kind.MAX, Kind.SUM):
        clauses = bs_i.clauses()
        if agg == Agg.SUM:
            s = lug.store

            def world_cost(state, clause):
                for k in range(lug.last + 1):
                    if s.evaluate(lug.clause_node(k, clause), state):
                        return k
                return INF

            def per_world(state):
                costs = [world_cost(state, c) for c in clauses]
                return max(costs, default=0) if kind == Kind.MAX else sum(costs)

            return sum(_per_world(lug, per_world))
        costs = [_lug_clause_cost(lug, c) for c in clauses]
        return max(costs, default=0) if kind == Kind.MAX else sum(costs)
    if kind == Kind.LEVEL:
        cubes = bs_i.constituents()
        if agg == Agg.SUM:
            s = lug.store

            def per_world(state):
                for k in range(lug.last + 1):
                    node = FALSE
                    for c in cubes:
                        node = s.or_(node, _reach_node(lug, k, c))
                    if s.evaluate(node, state):
                        return k
                return INF

            return sum(_per_world(lug, per_world))
        return _lug_level(lug, cubes)
    raise SpecError(f"kind {kind.value} is not a labelled-graph heuristic")


class CoverError(RuntimeError):
    pass


def lug_relaxed_plan(lug: LUG, bs_i: Formula) -> RelaxedPlan | None:
    """Relaxed plan over clause subgoals, covering worlds greedily."""
    cubes = bs_i.constituents()
    b = _lug_level(lug, cubes)
    if b == INF:
        return None
    b = int(b)
    s, dom = lug.store, lug.dom
    persist = set(dom.persistence.values())
    bsp = lug.bsp.node
    goals: list[dict] = [dict() for _ in range(b + 1)]
    for c in bs_i.clauses():
        goals[b][c] = bsp
    layers = [RPLayer() for _ in range(b)]
    for r in range(b, 0, -1):
        layer = layers[r - 1]
        for clause, need in goals[r].items():
            uncovered = need
            for l in clause:
                ref = (dom.persistence[l], 0)
                lab = lug.eff_node(ref, r - 1)
                cov = s.and_(uncovered, lab)
                if cov != FALSE:
                    layer.effects[ref] = s.or_(layer.effects.get(ref, FALSE), cov)
                    uncovered = s.and_(uncovered, s.not_(cov))
            if uncovered == FALSE:
                continue
            cands = sorted({
                e for l in clause for e in dom.achievers.get(l, ())
                if e[0] not in persist and lug.eff_node(e, r - 1) != FALSE
            })
            while uncovered != FALSE:
                best, best_n, best_cov = None, 0, FALSE
                for e in cands:
                    cov = s.and_(uncovered, lug.eff_node(e, r - 1))
                    if cov == FALSE:
                        continue
                    n = s.count(cov)
                    if n > best_n:
                        best, best_n, best_cov = e, n, cov
                if best is None:
                    raise CoverError(f"cannot cover a clause at level {r}")
                layer.effects[best] = s.or_(layer.effects.get(best, FALSE), best_cov)
                uncovered = s.and_(uncovered, s.not_(best_cov))
        for ref, lab in layer.effects.items():
            layer.actions[ref[0]] = s.or_(layer.actions.get(ref[0], FALSE), lab)
        below = goals[r - 1]
        for a, lab in layer.actions.items():
            for l in dom.actions[a].pre:
                key = (l,)
                below[key] = s.or_(below.get(key, FALSE), lab)
        for ref, lab in layer.effects.items():
            for l in dom.effect(ref).antecedent:
                key = (l,)
                below[key] = s.or_(below.get(key, FALSE), lab)
        goals[r - 1] = dict(sorted(below.items()))
    return RelaxedPlan(b, layers, goals, persist)


# ----------------------------------------------------------------------
# spec driven evaluation


class Heuristic:
    """Evaluate a :class:`HeuristicSpec` on search nodes.

    In regression the graphs are built once from the initial belief state
    and every node is the belief state to reach.  In progression the graphs
    are built from each node and the goal is the belief state to reach.
    """

    def __init__(self, problem: Problem, spec: HeuristicSpec, cache_size: int = 4096):
        self.problem = problem
        self.spec = spec
        self._values: OrderedDict = OrderedDict()
        self._substrates: OrderedDict = OrderedDict()
        self._graph_values: dict = {}
        self.cache_size = cache_size
        self.evaluations = 0
        self.deadline: float | None = None

    def __call__(self, bs: Formula) -> float:
        hit = self._values.get(bs.node)
        if hit is not None:
            self._values.move_to_end(bs.node)
            return hit
        if self.spec.direction == Direction.REGRESSION:
            val = self.estimate(self.problem.init, bs)
        else:
            val = self.estimate(bs, self.problem.goal)
        self._values[bs.node] = val
        if len(self._values) > self.cache_size:
            self._values.popitem(last=False)
        return val

    def substrate(self, bs_p: Formula):
        spec = self.spec
        hit = self._substrates.get(bs_p.node)
        if hit is not None:
            return hit
        p = self.problem
        if spec.substrate == Substrate.SG_UNION:
            g = build_single(aggregate_state(bs_p), p, spec.scheme, deadline=self.deadline)
        elif spec.substrate == Substrate.SG_SAMPLE:
            (state,) = sample_states(bs_p, 1e-12, spec.seed)
            g = state_graph(p, state, spec.scheme)
        elif spec.substrate == Substrate.MG:
            g = build_mg(bs_p, p, spec.fraction, spec.seed, spec.scheme, deadline=self.deadline)
        elif spec.substrate == Substrate.LUG:
            g = build_lug(bs_p, p, spec.scheme, spec.fraction, spec.seed, deadline=self.deadline)
        else:
            g = None
        self._substrates[bs_p.node] = g
        if len(self._substrates) > 256:
            self._substrates.popitem(last=False)
        return g

    def _graph_value(self, g: SingleGraph, bs_i: Formula, kind: Kind) -> float:
        key = (id(g), bs_i.node, kind)
        v = self._graph_values.get(key)
        if v is None:
            v = sg_heuristic(g, bs_i, kind)
            self._graph_values[key] = v
        return v

    def estimate(self, bs_p: Formula, bs_i: Formula) -> float:
        spec = self.spec
        self.evaluations += 1
        if bs_p.entails(bs_i):
            return 0
        if spec.kind == Kind.ZERO:
            return 0
        if spec.kind == Kind.CARD:
            return h_card(bs_i if spec.direction == Direction.REGRESSION else bs_p)
        g = self.substrate(bs_p)
        if spec.substrate in (Substrate.SG_UNION, Substrate.SG_SAMPLE):
            return self._graph_value(g, bs_i, spec.kind)
        if spec.substrate == Substrate.MG:
            if spec.kind == Kind.RP_UNION:
                return mg_rp_union(g, bs_i, spec.direction)
            vals = [self._graph_value(x, bs_i, spec.kind) for x in g]
            return sum(vals) if spec.agg == Agg.SUM else max(vals, default=0)
        if spec.substrate == Substrate.LUG:
            return lug_heuristic(g, bs_i, spec.kind, spec.agg)
        raise SpecError(str(spec))


ALL_SPECS = [
    "zero", "card",
    "sg:max", "sg:sum", "sg:level", "sg:rp", "sg1:rp",
    "mg:max:max", "mg:sum:max", "mg:level:max", "mg:rp:max",
    "mg:max:sum", "mg:sum:sum", "mg:level:sum", "mg:rp:sum", "mg:rpu",
    "lug:max", "lug:sum", "lug:level", "lug:rp",
]

RP_SPECS = ["sg:rp", "sg1:rp", "mg:rp:max", "mg:rp:sum", "mg:rpu", "lug:rp"]
