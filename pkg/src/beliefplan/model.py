"""Actions, effects and planning problems over a :class:`FormulaStore`."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

from .formula import Formula, FormulaStore, Literal


class ModelError(ValueError):
    pass


def _consistent(lits: Iterable[Literal]) -> bool:
    seen: dict[int, bool] = {}
    for fl, pos in lits:
        if seen.setdefault(fl, pos) != pos:
            return False
    return True


def _norm(lits: Iterable[Literal]) -> tuple[Literal, ...]:
    return tuple(sorted(set(lits)))


@dataclass(frozen=True)
class Effect:
    """Conditional effect ``antecedent => consequent`` (both literal conjunctions)."""

    antecedent: tuple[Literal, ...] = ()
    consequent: tuple[Literal, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "antecedent", _norm(self.antecedent))
        object.__setattr__(self, "consequent", _norm(self.consequent))
        if not _consistent(self.antecedent):
            raise ModelError("inconsistent effect antecedent")
        if not _consistent(self.consequent):
            raise ModelError("inconsistent effect consequent")


@dataclass(frozen=True)
class Action:
    name: str
    precondition: tuple[Literal, ...] = ()
    effects: tuple[Effect, ...] = (Effect(),)
    observations: tuple[Formula, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "precondition", _norm(self.precondition))
        if not _consistent(self.precondition):
            raise ModelError(f"{self.name}: inconsistent precondition")
        effects = tuple(self.effects)
        if not effects or effects[0].antecedent:
            effects = (Effect(),) + effects
        object.__setattr__(self, "effects", effects)
        object.__setattr__(self, "observations", tuple(self.observations))

    @property
    def sensing(self) -> bool:
        return bool(self.observations)

    @property
    def causative(self) -> bool:
        return any(e.consequent for e in self.effects)

    def __repr__(self) -> str:
        return f"Action({self.name})"


def make_action(
    name: str,
    pre: Iterable[Literal] = (),
    add: Iterable[Literal] = (),
    when: Sequence[tuple[Iterable[Literal], Iterable[Literal]]] = (),
    observations: Sequence[Formula] = (),
) -> Action:
    """Action with unconditional effect ``add`` and conditional effects ``when``."""
    effects = [Effect((), tuple(add))]
    effects += [Effect(tuple(a), tuple(c)) for a, c in when]
    return Action(name, tuple(pre), tuple(effects), tuple(observations))


@dataclass(frozen=True, eq=False)
class Problem:
    name: str
    store: FormulaStore
    actions: tuple[Action, ...]
    init: Formula
    goal: Formula
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(self.actions))
        if self.init.is_false:
            raise ModelError("initial belief state is inconsistent")
        if self.goal.is_false:
            raise ModelError("goal is inconsistent")
        names = [a.name for a in self.actions]
        if len(set(names)) != len(names):
            raise ModelError("duplicate action names")
        n = self.store.n
        for a in self.actions:
            lits = list(a.precondition)
            for e in a.effects:
                lits += e.antecedent + e.consequent
            for l in lits:
                if not 0 <= l.fluent < n:
                    raise ModelError(f"{a.name}: literal outside the fluent universe")
            for o in a.observations:
                if o.store is not self.store:
                    raise ModelError(f"{a.name}: observation from a foreign store")

    @property
    def fluents(self) -> list[str]:
        return self.store.names

    @cached_property
    def by_name(self) -> dict[str, Action]:
        return {a.name: a for a in self.actions}

    def action(self, name: str) -> Action:
        return self.by_name[name]

    @property
    def conformant(self) -> bool:
        return not any(a.sensing for a in self.actions)

    def without_sensing(self) -> Problem:
        acts = tuple(a for a in self.actions if not a.sensing)
        return Problem(self.name, self.store, acts, self.init, self.goal, dict(self.meta))

    def lit(self, text: str) -> Literal:
        return self.store.parse_literal(text)

    def f(self, text: str) -> Formula:
        """Parse a formula in the textual syntax over this problem's fluents."""
        return self.store.parse(text)

    def lit_name(self, lit: Literal) -> str:
        return self.store.lit_name(lit)

    def state_text(self, state: Sequence[bool]) -> str:
        return " ".join(
            n if v else f"-{n}" for n, v in zip(self.store.names, state)
        )

    def __repr__(self) -> str:
        return f"Problem({self.name}, {self.store.n} fluents, {len(self.actions)} actions)"
