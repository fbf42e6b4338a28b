"""Weighted A* regression, weighted AO* progression, plan validation and a BFS oracle."""
from __future__ import annotations

import heapq
import itertools
import time
from dataclasses import asdict, dataclass, field
from typing import Sequence

from .formula import Formula
from .graphs import INF, GraphTimeout
from .heuristic import Direction, Heuristic, HeuristicSpec, parse_spec
from .model import Action, Problem
from .transition import (
    ConflictingEffects,
    is_relevant,
    progress_branches,
    progress_state,
    regress,
)

DEFAULT_WEIGHT = 5.0


class SearchTimeout(RuntimeError):
    pass


class OracleCapExceeded(RuntimeError):
    pass


# ----------------------------------------------------------------------
# plans


@dataclass(eq=False)
class PlanNode:
    """One plan step; ``branches`` pairs a reading index (None when the
    action senses nothing) with the rest of the plan."""

    action: str
    branches: list = field(default_factory=list)


@dataclass
class Plan:
    root: PlanNode | None
    problem: Problem

    @classmethod
    def from_sequence(cls, problem: Problem, names: Sequence[str]) -> Plan:
        root = None
        for name in reversed(list(names)):
            node = PlanNode(name)
            if root is not None:
                node.branches.append((None, root))
            root = node
        return cls(root, problem)

    @property
    def conformant(self) -> bool:
        node = self.root
        while node is not None:
            if len(node.branches) > 1 or any(r is not None for r, _ in node.branches):
                return False
            node = node.branches[0][1] if node.branches else None
        return True

    def sequence(self) -> list[str]:
        if not self.conformant:
            raise ValueError("conditional plans have no single action sequence")
        out, node = [], self.root
        while node is not None:
            out.append(node.action)
            node = node.branches[0][1] if node.branches else None
        return out

    @property
    def depth(self) -> int:
        def walk(node):
            if node is None:
                return 0
            return 1 + max((walk(c) for _, c in node.branches), default=0)

        return walk(self.root)

    def to_text(self) -> str:
        lines: list[str] = []

        def walk(node, indent):
            while node is not None:
                lines.append("  " * indent + node.action)
                sensed = [b for b in node.branches if b[0] is not None]
                if not sensed:
                    node = node.branches[0][1] if node.branches else None
                    continue
                act = self.problem.action(node.action)
                for j, child in sensed:
                    obs = act.observations[j]
                    reading = obs.store.to_text(obs, form="dnf")
                    lines.append("  " * (indent + 1) + f"obs {reading}:")
                    if child is None:
                        lines.append("  " * (indent + 2) + "(done)")
                    else:
                        walk(child, indent + 2)
                return

        walk(self.root, 0)
        return "\n".join(lines)


@dataclass
class Stats:
    expanded: int = 0
    generated: int = 0
    heuristic_ms: float = 0.0
    search_ms: float = 0.0
    total_ms: float = 0.0
    plan_len: int | None = None
    status: str = "unsolved"

    def as_dict(self) -> dict:
        return asdict(self)

    def comparable(self) -> dict:
        """Everything except wall-clock timings."""
        d = self.as_dict()
        for k in ("heuristic_ms", "search_ms", "total_ms"):
            d.pop(k)
        return d


@dataclass
class SearchResult:
    plan: Plan | None
    stats: Stats
    trace: list = field(default_factory=list)

    @property
    def status(self) -> str:
        return self.stats.status


class _Timer:
    def __init__(self, heuristic: Heuristic, deadline: float | None):
        self.h = heuristic
        self.deadline = deadline
        self.spent = 0.0

    def __call__(self, bs: Formula) -> float:
        t = time.perf_counter()
        try:
            return self.h(bs)
        finally:
            self.spent += time.perf_counter() - t

    def check(self) -> None:
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise SearchTimeout("search time limit reached")


def _setup(problem: Problem, spec, direction: Direction, timeout: float | None):
    if spec is None:
        spec = "zero"
    if isinstance(spec, str):
        spec = parse_spec(spec, direction=direction)
    else:
        spec = spec.with_direction(direction)
    deadline = None if timeout is None else time.monotonic() + timeout
    h = Heuristic(problem, spec)
    h.deadline = deadline
    return _Timer(h, deadline)


def _finish(stats: Stats, timer: _Timer, start: float, plan: Plan | None) -> None:
    stats.total_ms = (time.perf_counter() - start) * 1000
    stats.heuristic_ms = timer.spent * 1000
    stats.search_ms = stats.total_ms - stats.heuristic_ms
    if plan is not None:
        stats.plan_len = plan.depth


# ----------------------------------------------------------------------
# A* in regression


def astar_regress(problem: Problem, spec: HeuristicSpec | str | None = "zero",
                  weight: float = DEFAULT_WEIGHT, timeout: float | None = None) -> SearchResult:
    """Weighted A* from the goal towards the initial belief state."""
    if not problem.conformant:
        raise ValueError("regression search needs observation-free actions")
    start = time.perf_counter()
    stats = Stats()
    timer = _setup(problem, spec, Direction.REGRESSION, timeout)
    init = problem.init
    counter = itertools.count()
    best_g: dict[int, int] = {}
    parent: dict[int, tuple[int | None, str | None]] = {}
    plan = None
    try:
        goal = problem.goal
        h0 = timer(goal)
        stats.generated = 1
        heap = []
        if h0 == INF:
            stats.status = "unsolvable"
        else:
            heap.append((weight * h0, 0, next(counter), goal))
        best_g[goal.node] = 0
        parent[goal.node] = (None, None)
        closed: set[int] = set()
        while heap:
            timer.check()
            f, neg_g, _, bs = heapq.heappop(heap)
            g = -neg_g
            if g > best_g.get(bs.node, INF) or bs.node in closed and g >= best_g[bs.node]:
                continue
            if init.entails(bs):
                names = []
                node = bs.node
                while parent[node][0] is not None:
                    prev, name = parent[node]
                    names.append(name)
                    node = prev
                plan = Plan.from_sequence(problem, names)
                stats.status = "solved"
                break
            closed.add(bs.node)
            stats.expanded += 1
            for a in problem.actions:
                if not is_relevant(a, bs):
                    continue
                child = regress(bs, a)
                if child.is_false:
                    continue
                cg = g + 1
                if cg >= best_g.get(child.node, INF):
                    continue
                hv = timer(child)
                stats.generated += 1
                if hv == INF:
                    continue
                best_g[child.node] = cg
                parent[child.node] = (bs.node, a.name)
                closed.discard(child.node)
                heapq.heappush(heap, (cg + weight * hv, -cg, next(counter), child))
        if plan is None:
            stats.status = "unsolvable"
    except (SearchTimeout, GraphTimeout):
        stats.status = "timeout"
    _finish(stats, timer, start, plan)
    return SearchResult(plan, stats)


# ----------------------------------------------------------------------
# AO* in progression


class _AONode:
    __slots__ = ("bs", "serial", "terminal", "expanded", "edges", "parents", "cost", "best",
                 "solved", "h")

    def __init__(self, bs: Formula, terminal: bool, serial: int):
        self.bs = bs
        self.serial = serial
        self.terminal = terminal
        self.expanded = False
        self.edges: list[tuple[Action, list]] = []  # (action, [(reading, node)])
        self.parents: set = set()
        self.cost = 0.0
        self.best: int | None = None
        self.solved = terminal
        self.h = 0.0


def _reaches(src: _AONode, dst: _AONode) -> bool:
    stack, seen = [src], set()
    while stack:
        n = stack.pop()
        if n is dst:
            return True
        if id(n) in seen:
            continue
        seen.add(id(n))
        for _, kids in n.edges:
            stack.extend(k for _, k in kids)
    return False


def _edge_cost(kids) -> float:
    return 1 + sum(k.cost for _, k in kids) / len(kids)


def _revise_node(n: _AONode) -> bool:
    """Recompute cost, best edge and solved flag; report whether anything changed."""
    if n.terminal or not n.expanded:
        return False
    old = (n.cost, n.best, n.solved)
    best, best_cost, best_solved = None, INF, False
    for i, (_, kids) in enumerate(n.edges):
        c = _edge_cost(kids)
        solved = all(k.solved for _, k in kids)
        if best is None or c < best_cost:
            take = True
        elif c > best_cost:
            take = False
        elif solved != best_solved:
            take = solved
        elif solved and i == n.best:
            take = True
        else:
            take = False
        if take:
            best, best_cost, best_solved = i, c, solved
    if best is None or best_cost == INF:
        n.cost, n.best, n.solved = INF, None, False
    else:
        n.cost, n.best, n.solved = best_cost, best, best_solved
    return (n.cost, n.best, n.solved) != old


def _propagate(leaf: _AONode) -> None:
    _revise_node(leaf)
    work = sorted(leaf.parents, key=lambda p: p.serial)
    while work:
        n = work.pop()
        if _revise_node(n):
            work.extend(sorted(n.parents, key=lambda p: p.serial))


def _pick_leaf(root: _AONode) -> _AONode | None:
    stack, seen = [root], set()
    while stack:
        n = stack.pop()
        if id(n) in seen or n.terminal:
            continue
        seen.add(id(n))
        if not n.expanded:
            return n
        if n.best is None:
            continue
        kids = n.edges[n.best][1]
        stack.extend(k for _, k in reversed(kids))
    return None


def aostar_progress(problem: Problem, spec: HeuristicSpec | str | None = "zero",
                    weight: float = DEFAULT_WEIGHT, timeout: float | None = None,
                    trace: bool = False) -> SearchResult:
    """Weighted AO* over belief states with observation hyper-edges.

    With ``trace`` every iteration records the expanded belief and the
    root's cost and best action after revision.
    """
    start = time.perf_counter()
    stats = Stats()
    timer = _setup(problem, spec, Direction.PROGRESSION, timeout)
    goal = problem.goal
    nodes: dict[int, _AONode] = {}
    events: list = []
    plan = None

    def get(bs: Formula) -> _AONode:
        n = nodes.get(bs.node)
        if n is None:
            n = _AONode(bs, bs.entails(goal), len(nodes))
            stats.generated += 1
            if not n.terminal:
                n.h = timer(bs)
                n.cost = weight * n.h
            nodes[bs.node] = n
        return n

    try:
        root = get(problem.init)
        while not root.solved and root.cost < INF:
            timer.check()
            leaf = _pick_leaf(root)
            if leaf is None:
                break
            leaf.expanded = True
            stats.expanded += 1
            for a in problem.actions:
                succ = progress_branches(leaf.bs, a)
                if not succ:
                    continue
                if any(bs.node == leaf.bs.node for _, bs in succ):
                    continue
                existing = [nodes.get(bs.node) for _, bs in succ]
                if any(e is not None and _reaches(e, leaf) for e in existing):
                    continue
                kids = [(j, get(bs)) for j, bs in succ]
                if any(k.cost == INF for _, k in kids):
                    continue
                for _, k in kids:
                    k.parents.add(leaf)
                leaf.edges.append((a, kids))
            _propagate(leaf)
            if trace:
                events.append({
                    "expanded": leaf.bs,
                    "root_cost": root.cost,
                    "root_best": None if root.best is None else root.edges[root.best][0].name,
                })
        if root.solved:
            stats.status = "solved"
            plan = Plan(_extract(root), problem)
        else:
            stats.status = "unsolvable"
    except (SearchTimeout, GraphTimeout):
        stats.status = "timeout"
    except ConflictingEffects:
        raise
    _finish(stats, timer, start, plan)
    res = SearchResult(plan, stats, events)
    res.root_cost = nodes[problem.init.node].cost if problem.init.node in nodes else INF
    res.graph = nodes
    return res


def _extract(root: _AONode) -> PlanNode | None:
    memo: dict[int, PlanNode | None] = {}

    def walk(n: _AONode):
        if n.terminal:
            return None
        if id(n) in memo:
            return memo[id(n)]
        a, kids = n.edges[n.best]
        node = PlanNode(a.name)
        memo[id(n)] = node
        for j, k in kids:
            node.branches.append((j, walk(k)))
        if all(c is None for _, c in node.branches) and all(j is None for j, _ in node.branches):
            node.branches = []
        return node

    return walk(root)


def revision_is_fixpoint(result: SearchResult) -> bool:
    """Re-running revision on a finished AO* graph changes nothing."""
    return not any(_revise_node(n) for n in list(result.graph.values()))


# ----------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    valid: bool
    max_length: int
    failing_state: tuple | None = None
    reason: str = ""


def validate(plan: Plan | Sequence[str] | None, problem: Problem) -> ValidationReport:
    """Simulate ``plan`` from every initial state."""
    if plan is None:
        plan = Plan(None, problem)
    elif not isinstance(plan, Plan):
        plan = Plan.from_sequence(problem, plan)
    s = problem.store
    longest = 0
    for state in problem.init.models():
        node, steps, cur = plan.root, 0, state
        while node is not None:
            a = problem.action(node.action)
            if not all(cur[fl] == pos for fl, pos in a.precondition):
                return ValidationReport(False, longest, state, f"{a.name} is not applicable")
            try:
                cur = progress_state(cur, a)
            except ConflictingEffects as exc:
                return ValidationReport(False, longest, state, str(exc))
            steps += 1
            if not node.branches:
                node = None
            elif node.branches[0][0] is None:
                node = node.branches[0][1]
            else:
                nxt = [c for j, c in node.branches if s.evaluate(a.observations[j].node, cur)]
                if not nxt:
                    return ValidationReport(False, longest, state, f"no branch for the reading after {a.name}")
                node = nxt[0]
        longest = max(longest, steps)
        if not s.evaluate(problem.goal.node, cur):
            return ValidationReport(False, longest, state, "goal not reached")
    return ValidationReport(True, longest)


# ----------------------------------------------------------------------
# breadth-first oracle


def bfs_oracle(problem: Problem, start: Formula | None = None, goal: Formula | None = None,
               cap: int = 200_000) -> float:
    """Optimal maximum plan-path length by exhaustive progression, INF if unsolvable."""
    start = problem.init if start is None else start
    goal = problem.goal if goal is None else goal
    if start.entails(goal):
        return 0
    if problem.conformant:
        seen = {start.node}
        frontier = [start]
        depth = 0
        while frontier:
            depth += 1
            nxt = []
            for bs in frontier:
                for a in problem.actions:
                    for _, child in progress_branches(bs, a):
                        if child.node in seen:
                            continue
                        if child.entails(goal):
                            return depth
                        seen.add(child.node)
                        if len(seen) > cap:
                            raise OracleCapExceeded(f"more than {cap} belief states")
                        nxt.append(child)
            frontier = nxt
        return INF
    # AND-OR: explore, then compute the least fixpoint of the min-max value
    succ: dict[int, list[list[int]]] = {}
    order = [start]
    index = {start.node: start}
    i = 0
    while i < len(order):
        bs = order[i]
        i += 1
        if bs.entails(goal):
            succ[bs.node] = []
            continue
        edges = []
        for a in problem.actions:
            kids = progress_branches(bs, a)
            if not kids:
                continue
            edges.append([c.node for _, c in kids])
            for _, c in kids:
                if c.node not in index:
                    index[c.node] = c
                    order.append(c)
                    if len(order) > cap:
                        raise OracleCapExceeded(f"more than {cap} belief states")
        succ[bs.node] = edges
    value = {n: 0 for n, bs in index.items() if bs.entails(goal)}
    changed = True
    while changed:
        changed = False
        for n, edges in succ.items():
            if n in value and value[n] == 0:
                continue
            best = min(
                (1 + max(value.get(k, INF) for k in kids) for kids in edges), default=INF
            )
            if best < value.get(n, INF):
                value[n] = best
                changed = True
    return value.get(start.node, INF)


def solve(problem: Problem, direction: str = "progress", spec: HeuristicSpec | str = "zero",
          weight: float = DEFAULT_WEIGHT, timeout: float | None = None) -> SearchResult:
    if Direction(direction) == Direction.REGRESSION:
        return astar_regress(problem, spec, weight, timeout)
    return aostar_progress(problem, spec, weight, timeout)
