from __future__ import annotations

import random
from itertools import combinations

from beliefplan.graphs import build_lug, state_graph
from beliefplan.mutex import MutexScheme
from beliefplan.transition import progress


def lug_mg_mismatches(problem, scheme: str = "nx") -> int:
    """Count disagreements between the labelled graph and per-world single graphs.

    Membership of every literal and action, and (with a scheme) every
    same-world literal/action/effect mutex, is compared world by world.
    """
    lug = build_lug(problem.init, problem, scheme)
    s = problem.store
    bad = 0
    for st in problem.init.models():
        g = state_graph(problem, st, MutexScheme.parse(scheme))
        top = max(lug.last, g.last) + 1
        for k in range(top + 1):
            for lit in lug.dom.all_literals:
                bad += (lit in g.literals(k)) != s.evaluate(lug.lit_node(lit, k), st)
            for a in range(len(lug.dom.actions)):
                bad += (a in g.actions(k)) != s.evaluate(lug.act_node(a, k), st)
            for ref in g.effects(k) | set(lug.effs[min(k, lug.last)]):
                bad += (ref in g.effects(k)) != s.evaluate(lug.eff_node(ref, k), st)
            if not MutexScheme.parse(scheme).enabled:
                continue
            for kind, elems in (("literal", g.literals(k)), ("action", g.actions(k)),
                                ("effect", g.effects(k))):
                mx = g.mutexes(kind, k)
                for x, y in combinations(sorted(elems), 2):
                    labelled = s.evaluate(lug.alg.diagonal(lug.mutex_node(kind, k, x, y)), st)
                    bad += labelled != (frozenset((x, y)) in mx)
    return bad


def random_reachable_beliefs(problem, count: int, rng: random.Random, max_depth: int = 6):
    """Belief states reached by random walks of progression from the initial belief."""
    out = []
    while len(out) < count:
        bs = problem.init
        for _ in range(rng.randint(0, max_depth)):
            succ = [c for a in problem.actions for c in progress(bs, a)]
            if not succ:
                break
            bs = rng.choice(succ)
        out.append(bs)
    return out
