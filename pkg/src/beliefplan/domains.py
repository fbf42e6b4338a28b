"""Generators for the benchmark families.

Encodings
---------
BT(n)    fluents ``arm, inP1..inPn``; ``DunkPi`` has the conditional effect
         ``inPi => not arm``.  One initial state per package.
BTC(n)   adds ``clog``.  ``DunkPi`` needs ``not clog`` and clogs the toilet,
         ``Flush`` unclogs it.  ``courteous=True`` starts clogged and also
         requires an unclogged toilet at the end.
BTCS(n)  BTC(n) plus ``DetectMetalPi`` sensing ``inPi``.
Ring(n)  per room ``at_ri, open_ri, closed_ri, locked_ri`` (exactly one of
         the three window fluents holds).  ``right``/``left`` move around the
         ring, ``close`` turns open into closed and ``lock`` turns closed into
         locked in the current room.  Goal: every window locked.
Cube(n)  one-hot position per axis ``x1..xn, y1..yn, z1..zn``; the six moves
         saturate at the border.  Goal: the center cell (n odd).
"""
from __future__ import annotations

from importlib import resources

from .formula import FormulaStore, Literal
from .model import Problem, make_action
from .parser import parse


def _check(n: int, lo: int = 2) -> None:
    if not isinstance(n, int) or n < lo:
        raise ValueError(f"size must be an integer >= {lo}, got {n!r}")


def _pos(store: FormulaStore, name: str) -> Literal:
    return Literal(store.index[name])


def _neg(store: FormulaStore, name: str) -> Literal:
    return Literal(store.index[name], False)


def gen_bt(n: int) -> Problem:
    _check(n)
    pk = [f"inP{i}" for i in range(1, n + 1)]
    s = FormulaStore(["arm"] + pk)
    acts = [
        make_action(f"DunkP{i + 1}", when=[([_pos(s, p)], [_neg(s, "arm")])])
        for i, p in enumerate(pk)
    ]
    init = s.literal("arm") & s.exactly_one([s.literal(p) for p in pk])
    goal = s.literal("(not arm)")
    return Problem(f"bt-{n}", s, tuple(acts), init, goal)


def _btc(n: int, courteous: bool, sensors: bool) -> Problem:
    pk = [f"inP{i}" for i in range(1, n + 1)]
    s = FormulaStore(["arm", "clog"] + pk)
    acts = [
        make_action(
            f"DunkP{i + 1}",
            pre=[_neg(s, "clog")],
            add=[_pos(s, "clog")],
            when=[([_pos(s, p)], [_neg(s, "arm")])],
        )
        for i, p in enumerate(pk)
    ]
    acts.append(make_action("Flush", add=[_neg(s, "clog")]))
    if sensors:
        for i, p in enumerate(pk):
            acts.append(
                make_action(f"DetectMetalP{i + 1}", observations=[s.literal(p), ~s.literal(p)])
            )
    clog = s.literal("clog")
    init = s.literal("arm") & (clog if courteous else ~clog)
    init = init & s.exactly_one([s.literal(p) for p in pk])
    goal = s.literal("(not arm)")
    if courteous:
        goal = goal & ~clog
    name = ("cbtc" if courteous else "btcs" if sensors else "btc") + f"-{n}"
    return Problem(name, s, tuple(acts), init, goal)


def gen_btc(n: int, courteous: bool = False) -> Problem:
    _check(n)
    return _btc(n, courteous, sensors=False)


def gen_cbtc(n: int = 2) -> Problem:
    _check(n)
    return _btc(n, True, sensors=False)


def gen_btcs(n: int) -> Problem:
    _check(n)
    return _btc(n, False, sensors=True)


def gen_ring(n: int) -> Problem:
    _check(n)
    rooms = range(1, n + 1)
    names = []
    for i in rooms:
        names += [f"at_r{i}", f"open_r{i}", f"closed_r{i}", f"locked_r{i}"]
    s = FormulaStore(names)
    p = lambda x: _pos(s, x)  # noqa: E731
    q = lambda x: _neg(s, x)  # noqa: E731
    nxt = {i: i % n + 1 for i in rooms}
    prv = {i: (i - 2) % n + 1 for i in rooms}
    right = make_action(
        "right", when=[([p(f"at_r{i}")], [q(f"at_r{i}"), p(f"at_r{nxt[i]}")]) for i in rooms]
    )
    left = make_action(
        "left", when=[([p(f"at_r{i}")], [q(f"at_r{i}"), p(f"at_r{prv[i]}")]) for i in rooms]
    )
    close = make_action(
        "close",
        when=[
            ([p(f"at_r{i}"), p(f"open_r{i}")], [q(f"open_r{i}"), p(f"closed_r{i}")])
            for i in rooms
        ],
    )
    lock = make_action(
        "lock",
        when=[
            ([p(f"at_r{i}"), p(f"closed_r{i}")], [q(f"closed_r{i}"), p(f"locked_r{i}")])
            for i in rooms
        ],
    )
    init = s.exactly_one([s.literal(f"at_r{i}") for i in rooms])
    for i in rooms:
        init = init & s.exactly_one(
            [s.literal(f"{w}_r{i}") for w in ("open", "closed", "locked")]
        )
    goal = s.conj_all(s.literal(f"locked_r{i}") for i in rooms)
    return Problem(f"ring-{n}", s, (right, left, close, lock), init, goal)


def gen_cube_center(n: int) -> Problem:
    _check(n, 3)
    if n % 2 == 0:
        raise ValueError("cube side must be odd so that a center cell exists")
    axes = "xyz"
    s = FormulaStore([f"{a}{i}" for a in axes for i in range(1, n + 1)])
    acts = []
    for a in axes:
        up = [([_pos(s, f"{a}{i}")], [_neg(s, f"{a}{i}"), _pos(s, f"{a}{i + 1}")]) for i in range(1, n)]
        down = [([_pos(s, f"{a}{i}")], [_neg(s, f"{a}{i}"), _pos(s, f"{a}{i - 1}")]) for i in range(2, n + 1)]
        acts.append(make_action(f"{a}-up", when=up))
        acts.append(make_action(f"{a}-down", when=down))
    init = s.true
    for a in axes:
        init = init & s.exactly_one([s.literal(f"{a}{i}") for i in range(1, n + 1)])
    c = (n + 1) // 2
    goal = s.conj_all(s.literal(f"{a}{c}") for a in axes)
    return Problem(f"cube-{n}", s, tuple(acts), init, goal)


GENERATORS = {
    "bt": gen_bt,
    "btc": gen_btc,
    "cbtc": gen_cbtc,
    "btcs": gen_btcs,
    "ring": gen_ring,
    "cube": gen_cube_center,
}


def bundled(name: str) -> Problem:
    """Load one of the ``.bsp`` files shipped in ``beliefplan/data``."""
    text = resources.files("beliefplan").joinpath("data", f"{name}.bsp").read_text()
    return parse(text)


def generate(spec: str) -> Problem:
    """Build a problem from ``name:n`` (``cbtc`` needs no size)."""
    name, _, size = spec.partition(":")
    name = name.strip().lower()
    if name not in GENERATORS:
        raise ValueError(f"unknown generator {name!r}; choose from {', '.join(GENERATORS)}")
    if not size:
        if name == "cbtc":
            return gen_cbtc()
        raise ValueError(f"generator {name!r} needs a size, e.g. {name}:3")
    try:
        n = int(size)
    except ValueError:
        raise ValueError(f"bad size {size!r}") from None
    return GENERATORS[name](n)


# known plan families, used by tests and docs


def reference_plan(problem_name: str) -> list[str]:
    kind, _, size = problem_name.partition("-")
    n = int(size)
    if kind == "bt":
        return [f"DunkP{i}" for i in range(1, n + 1)]
    if kind in ("btc", "btcs"):
        out = []
        for i in range(1, n + 1):
            if i > 1:
                out.append("Flush")
            out.append(f"DunkP{i}")
        return out
    if kind == "cbtc":
        out = []
        for i in range(1, n + 1):
            out += ["Flush", f"DunkP{i}"]
        return out + ["Flush"]
    if kind == "ring":
        out = []
        for i in range(n):
            if i:
                out.append("right")
            out += ["close", "lock"]
        return out
    if kind == "cube":
        out = []
        for a in "xyz":
            out += [f"{a}-up"] * (n - 1) + [f"{a}-down"] * ((n - 1) // 2)
        return out
    raise ValueError(problem_name)
