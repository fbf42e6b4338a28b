"""Reader and printer for ``.bsp`` problem files.

A ``.bsp`` file is a single PDDL-like s-expression::

    (define (problem btcs)
      (:fluents arm clog inP1 inP2)
      (:action DunkP1
        :precondition (not clog)
        :effect (and clog (when inP1 (not arm))))
      (:action DetectMetal
        :observation (inP1 (not inP1)))
      (:init (and arm (not clog) (oneof inP1 inP2)))
      (:goal (not arm)))

Lifted input is accepted too: ``(:types ...)``, ``(:objects ...)`` and
``(:predicates (p ?x - t) ...)`` declare the ground atoms, and actions
may carry ``:parameters``.  Ground atoms are named ``p_a_b``.  See the
README for the full grammar.
"""
from __future__ import annotations

import itertools
import warnings
from pathlib import Path

from .formula import Formula, FormulaStore, Literal
from .model import Action, Effect, ModelError, Problem
from .sexpr import Atom, SExprError, SList, read_all

CONNECTIVES = {"and", "or", "not", "oneof", "imply", "when", "forall", "exists"}


class ParseError(SExprError):
    pass


def _err(msg: str, node=None) -> ParseError:
    line = getattr(node, "line", 0)
    col = getattr(node, "col", 0)
    return ParseError(msg, line, col)


def _typed_list(items: list, default: str = "object") -> list[tuple[str, str]]:
    """Parse ``a b - t c`` into ``[(a, t), (b, t), (c, object)]``."""
    out: list[tuple[str, str]] = []
    pending: list[str] = []
    i = 0
    while i < len(items):
        it = items[i]
        if not isinstance(it, Atom):
            raise _err("expected a name", it)
        if it.value == "-":
            if i + 1 >= len(items) or not isinstance(items[i + 1], Atom):
                raise _err("expected a type after '-'", it)
            t = items[i + 1].value
            out += [(p, t) for p in pending]
            pending = []
            i += 2
            continue
        pending.append(it.value)
        i += 1
    out += [(p, default) for p in pending]
    return out


class _Reader:
    def __init__(self, text: str):
        exprs = read_all(text)
        if len(exprs) != 1 or not isinstance(exprs[0], SList) or exprs[0].head() != "define":
            first = exprs[0] if exprs else None
            raise _err("expected a single (define ...) form", first)
        self.root = exprs[0]
        self.sections: dict[str, list[SList]] = {}
        self.name = "problem"
        for item in self.root.items[1:]:
            if not isinstance(item, SList) or not item.items:
                raise _err("expected a section", item)
            head = item.head()
            if head in ("problem", "domain") and len(item.items) == 2:
                self.name = str(item.items[1])
                continue
            if head is None or not head.startswith(":"):
                raise _err(f"unknown section {head!r}", item)
            self.sections.setdefault(head, []).append(item)
        self.supertypes: dict[str, str] = {}
        for sec in self.sections.get(":types", []):
            for t, parent in _typed_list(sec.items[1:]):
                self.supertypes[t] = parent
        self.objects: dict[str, list[str]] = {}
        for key in (":constants", ":objects"):
            for sec in self.sections.get(key, []):
                for obj, t in _typed_list(sec.items[1:]):
                    for ty in self._type_chain(t):
                        self.objects.setdefault(ty, []).append(obj)
        self.predicates: dict[str, list[str]] = {}
        fluents: list[str] = []
        for sec in self.sections.get(":fluents", []):
            for it in sec.items[1:]:
                if not isinstance(it, Atom):
                    raise _err("fluent names must be atoms", it)
                fluents.append(it.value)
        for sec in self.sections.get(":predicates", []):
            for it in sec.items[1:]:
                if isinstance(it, Atom):
                    self.predicates[it.value] = []
                    fluents.append(it.value)
                    continue
                pname = it.head()
                if pname is None:
                    raise _err("bad predicate declaration", it)
                types = [t for _, t in _typed_list(it.items[1:])]
                self.predicates[pname] = types
                if types:
                    for args in itertools.product(*(self._objs(t, it) for t in types)):
                        fluents.append(self.atom_name(pname, args))
                else:
                    fluents.append(pname)
        if not fluents:
            raise _err("no fluents declared", self.root)
        dup = {f for f in fluents if fluents.count(f) > 1}
        if dup:
            raise _err(f"fluent declared twice: {sorted(dup)[0]}", self.root)
        self.store = FormulaStore(fluents)

    def _type_chain(self, t: str) -> list[str]:
        chain = [t]
        while chain[-1] in self.supertypes and self.supertypes[chain[-1]] not in chain:
            chain.append(self.supertypes[chain[-1]])
        if "object" not in chain:
            chain.append("object")
        return chain

    def _objs(self, t: str, node) -> list[str]:
        if t not in self.objects:
            raise _err(f"no objects of type {t!r}", node)
        return self.objects[t]

    @staticmethod
    def atom_name(pred: str, args) -> str:
        return "_".join((pred,) + tuple(args)) if args else pred

    # ------------------------------------------------------------------
    def _atom(self, expr, binding: dict[str, str]) -> Literal | None:
        store = self.store
        if isinstance(expr, Atom):
            v = expr.value
            if v in ("true", "false"):
                return None
            v = binding.get(v, v)
            if v not in store.index:
                raise _err(f"undeclared fluent {v!r}", expr)
            return Literal(store.index[v])
        head = expr.head()
        args = []
        for a in expr.items[1:]:
            if not isinstance(a, Atom):
                raise _err("atom arguments must be names", a)
            args.append(binding.get(a.value, a.value))
        name = self.atom_name(head, args)
        if name not in store.index:
            raise _err(f"undeclared fluent {name!r}", expr)
        return Literal(store.index[name])

    def is_atom(self, expr) -> bool:
        if isinstance(expr, Atom):
            return True
        head = expr.head()
        return head is not None and head not in CONNECTIVES

    def formula(self, expr, binding: dict[str, str]) -> Formula:
        store = self.store
        if self.is_atom(expr):
            if isinstance(expr, Atom) and expr.value in ("true", "false"):
                return store.true if expr.value == "true" else store.false
            if isinstance(expr, SList) and not expr.items:
                raise _err("empty formula", expr)
            return store.literal(self._atom(expr, binding))
        op = expr.head()
        args = expr.items[1:]
        if op == "and":
            return store.conj_all(self.formula(a, binding) for a in args)
        if op == "or":
            return store.disj_all(self.formula(a, binding) for a in args)
        if op == "not":
            if len(args) != 1:
                raise _err("not takes one argument", expr)
            return ~self.formula(args[0], binding)
        if op == "oneof":
            return store.exactly_one([self.formula(a, binding) for a in args])
        if op == "imply":
            if len(args) != 2:
                raise _err("imply takes two arguments", expr)
            return ~self.formula(args[0], binding) | self.formula(args[1], binding)
        raise _err(f"{op!r} is not allowed in a formula", expr)

    def literals(self, expr, binding, what: str) -> list[Literal]:
        """A conjunction of literals (effect consequents)."""
        if isinstance(expr, SList) and expr.head() == "and":
            out = []
            for a in expr.items[1:]:
                out += self.literals(a, binding, what)
            return out
        if isinstance(expr, SList) and expr.head() == "not":
            if len(expr.items) != 2 or not self.is_atom(expr.items[1]):
                raise _err(f"{what} must be a conjunction of literals", expr)
            lit = self._atom(expr.items[1], binding)
            return [] if lit is None else [~lit]
        if self.is_atom(expr):
            lit = self._atom(expr, binding)
            return [] if lit is None else [lit]
        if isinstance(expr, SList) and expr.head() in ("or", "oneof"):
            raise _err("disjunctive effects are not allowed", expr)
        raise _err(f"{what} must be a conjunction of literals", expr)

    def effects(self, expr, binding) -> list[tuple[Formula, list[Literal]]]:
        if isinstance(expr, SList) and expr.head() == "and":
            out = []
            for a in expr.items[1:]:
                out += self.effects(a, binding)
            return out
        if isinstance(expr, SList) and expr.head() == "when":
            if len(expr.items) != 3:
                raise _err("when takes a condition and an effect", expr)
            cond = self.formula(expr.items[1], binding)
            return [(cond, self.literals(expr.items[2], binding, "conditional effect"))]
        return [(self.store.true, self.literals(expr, binding, "effect"))]

    def actions(self) -> list[Action]:
        out: list[Action] = []
        for sec in self.sections.get(":action", []):
            if len(sec.items) < 2 or not isinstance(sec.items[1], Atom):
                raise _err("action needs a name", sec)
            name = sec.items[1].value
            fields: dict[str, object] = {}
            rest = sec.items[2:]
            if len(rest) % 2:
                raise _err("action fields come in :key value pairs", sec)
            for k, v in zip(rest[::2], rest[1::2]):
                if not isinstance(k, Atom) or not k.value.startswith(":"):
                    raise _err("expected a :key", k)
                fields[k.value] = v
            unknown = set(fields) - {":parameters", ":precondition", ":effect", ":observation", ":observe"}
            if unknown:
                raise _err(f"unknown action field {sorted(unknown)[0]}", sec)
            params = []
            if ":parameters" in fields:
                p = fields[":parameters"]
                if not isinstance(p, SList):
                    raise _err("parameters must be a list", p)
                params = _typed_list(p.items)
            domains = [self._objs(t, sec) for _, t in params]
            for args in itertools.product(*domains):
                binding = {var: obj for (var, _), obj in zip(params, args)}
                gname = self.atom_name(name, args)
                out += self._ground(gname, fields, binding, sec)
        return out

    def _ground(self, name, fields, binding, node) -> list[Action]:
        store = self.store
        pre = store.true
        if ":precondition" in fields:
            pre = self.formula(fields[":precondition"], binding)
        effs: list[Effect] = []
        uncond: list[Literal] = []
        if ":effect" in fields:
            for cond, cons in self.effects(fields[":effect"], binding):
                if cond.is_true:
                    uncond += cons
                    continue
                for cube in cond.constituents():
                    try:
                        effs.append(Effect(cube, tuple(cons)))
                    except ModelError as exc:
                        raise _err(f"{name}: {exc}", node) from None
        obs: list[Formula] = []
        if ":observation" in fields:
            o = fields[":observation"]
            if not isinstance(o, SList):
                raise _err(":observation takes a list of readings", o)
            obs = [self.formula(x, binding) for x in o.items]
        if ":observe" in fields:
            f = self.formula(fields[":observe"], binding)
            obs += [f, ~f]
        for i, a in enumerate(obs):
            for b in obs[i + 1:]:
                if not (a & b).is_false:
                    warnings.warn(f"{name}: sensor readings are not pairwise inconsistent")
        try:
            first = Effect((), tuple(uncond))
        except ModelError as exc:
            raise _err(f"{name}: {exc}", node) from None
        effects = (first,) + tuple(effs)
        cubes = pre.constituents()
        acts = []
        for i, cube in enumerate(cubes):
            aname = name if len(cubes) == 1 else f"{name}#{i + 1}"
            acts.append(Action(aname, cube, effects, tuple(obs)))
        return acts

    def problem(self) -> Problem:
        inits = self.sections.get(":init", [])
        if not inits:
            raise _err("missing :init section", self.root)
        if len(inits) > 1:
            raise _err("more than one :init section", inits[1])
        init_sec = inits[0]
        if len(init_sec.items) < 2:
            raise _err("empty :init section", init_sec)
        init = self.store.conj_all(self.formula(x, {}) for x in init_sec.items[1:])
        if init.is_false:
            raise _err("initial belief state is inconsistent", init_sec)
        goals = self.sections.get(":goal", [])
        if len(goals) != 1 or len(goals[0].items) < 2:
            raise _err("expected exactly one non-empty :goal section", goals[0] if goals else self.root)
        goal = self.store.conj_all(self.formula(x, {}) for x in goals[0].items[1:])
        if goal.is_false:
            raise _err("goal is inconsistent", goals[0])
        acts = self.actions()
        try:
            return Problem(self.name, self.store, tuple(acts), init, goal)
        except ModelError as exc:
            raise _err(str(exc), self.root) from None


def parse(text: str) -> Problem:
    """Parse ``.bsp`` source into a grounded :class:`Problem`."""
    try:
        return _Reader(text).problem()
    except ParseError:
        raise
    except SExprError as exc:
        raise ParseError(exc.msg, exc.line, exc.col) from None


def load(path: str | Path) -> Problem:
    return parse(Path(path).read_text())


def _conj_text(problem: Problem, lits) -> str:
    names = [problem.lit_name(l) for l in lits]
    if len(names) == 1:
        return names[0]
    return "(and" + "".join(" " + n for n in names) + ")"


def to_text(problem: Problem) -> str:
    """Print a problem as propositional ``.bsp`` source."""
    lines = [f"(define (problem {problem.name})"]
    lines.append("  (:fluents " + " ".join(problem.fluents) + ")")
    for a in problem.actions:
        lines.append(f"  (:action {a.name}")
        if a.precondition:
            lines.append("    :precondition " + _conj_text(problem, a.precondition))
        parts = []
        parts += [problem.lit_name(l) for l in a.effects[0].consequent]
        for e in a.effects[1:]:
            parts.append(f"(when {_conj_text(problem, e.antecedent)} {_conj_text(problem, e.consequent)})")
        if parts:
            lines.append("    :effect (and " + " ".join(parts) + ")")
        if a.observations:
            lines.append("    :observation (" + " ".join(o.to_text() for o in a.observations) + ")")
        lines[-1] += ")"
    lines.append(f"  (:init {problem.init.to_text()})")
    lines.append(f"  (:goal {problem.goal.to_text()}))")
    return "\n".join(lines) + "\n"
