"""Command-line front end: ``bsp solve``, ``bsp bench`` and ``bsp hsnapshot``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .domains import generate
from .graphs import INF
from .heuristic import ALL_SPECS, Heuristic, SpecError, parse_spec
from .model import ModelError
from .parser import ParseError, load
from .search import DEFAULT_WEIGHT, OracleCapExceeded, bfs_oracle, solve, validate

EXIT_SOLVED, EXIT_UNSOLVABLE, EXIT_TIMEOUT, EXIT_USAGE = 0, 1, 2, 3
CSV_COLUMNS = ["problem", "spec", "total_ms", "heuristic_ms", "expanded", "plan_len", "status"]
SNAPSHOT_SPECS = ALL_SPECS + ["lug:level:fx", "lug:rp:fx"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _default_timeout() -> float:
    return float(os.environ.get("BSP_TIMEOUT_S", 1200))


def _default_seed() -> int:
    return int(os.environ.get("BSP_SEED", 0))


def _add_problem_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--gen", help="generator, e.g. btc:3, ring:2, cbtc")
    src.add_argument("--file", help="path to a .bsp problem file")


def _add_heuristic_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--frac", type=float, default=1.0, help="fraction of worlds sampled for mg/lug")
    p.add_argument("--seed", type=int, default=None, help="sampling seed (env BSP_SEED)")
    p.add_argument("--mutex", default=None, help="nx|stx|dyx|fx with optional -sx|-ix|-cross")


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="bsp", description="Belief-space planning with planning-graph heuristics")
    sub = top.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("solve", help="solve one problem")
    _add_problem_args(s)
    s.add_argument("--dir", choices=["regress", "progress"], default="progress")
    s.add_argument("--h", default="zero", help="heuristic spec, e.g. lug:rp, mg:rp:sum, card")
    s.add_argument("--w", type=float, default=DEFAULT_WEIGHT, help="heuristic weight")
    s.add_argument("--timeout", type=float, default=None, help="seconds (env BSP_TIMEOUT_S)")
    _add_heuristic_args(s)

    b = sub.add_parser("bench", help="run a JSON suite and print CSV")
    b.add_argument("suite", help="suite file")
    b.add_argument("--out", default=None, help="CSV output path (default stdout)")
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--timeout", type=float, default=None)

    h = sub.add_parser("hsnapshot", help="every heuristic's value at one belief state")
    _add_problem_args(h)
    h.add_argument("--dir", choices=["regress", "progress"], default="regress")
    h.add_argument("--at", choices=["goal", "init"], default=None,
                   help="belief to evaluate (default: goal in regression, init in progression)")
    h.add_argument("--specs", default=None, help="comma separated spec list")
    h.add_argument("--cap", type=int, default=200_000, help="belief-state cap for the oracle")
    h.add_argument("--json", action="store_true", help="print JSON instead of a table")
    _add_heuristic_args(h)
    return top


def load_problem(gen: str | None, path: str | None):
    try:
        return generate(gen) if gen else load(path)
    except (ValueError, ModelError, ParseError, OSError) as exc:
        raise UsageError(str(exc)) from None


def _spec(text: str, args) -> object:
    seed = args.seed if args.seed is not None else _default_seed()
    try:
        return parse_spec(text, mutex=args.mutex, fraction=args.frac, seed=seed)
    except (SpecError, ValueError) as exc:
        raise UsageError(f"bad heuristic spec {text!r}: {exc}") from None


def run_one(problem, direction: str, spec, weight: float, timeout: float):
    if direction == "regress" and not problem.conformant:
        raise UsageError("regression needs a problem without observations")
    res = solve(problem, direction, spec, weight, timeout)
    if res.plan is not None:
        report = validate(res.plan, problem)
        if not report.valid:
            raise RuntimeError(f"search returned an invalid plan: {report.reason}")
    return res


def _status_code(status: str) -> int:
    return {"solved": EXIT_SOLVED, "timeout": EXIT_TIMEOUT}.get(status, EXIT_UNSOLVABLE)


def cmd_solve(args) -> int:
    problem = load_problem(args.gen, args.file)
    spec = _spec(args.h, args)
    timeout = args.timeout if args.timeout is not None else _default_timeout()
    res = run_one(problem, args.dir, spec, args.w, timeout)
    if res.plan is not None:
        text = res.plan.to_text()
        print(text if text else "(empty plan)")
    else:
        print(f"no plan: {res.status}")
    stats = res.stats.as_dict()
    stats.update(problem=problem.name, spec=str(spec), dir=args.dir, weight=args.w)
    print("stats: " + json.dumps(stats, sort_keys=True))
    return _status_code(res.status)


def parse_stats_line(line: str) -> dict:
    if not line.startswith("stats: "):
        raise ValueError("not a stats line")
    return json.loads(line[len("stats: "):])


# ----------------------------------------------------------------------
# bench


def suite_rows(suite: dict) -> list[dict]:
    """Expand a suite into rows.  Either ``rows`` lists explicit runs or
    ``problems`` x ``specs`` is taken as a product with shared settings."""
    defaults = {
        "dir": suite.get("dir", "progress"),
        "weight": suite.get("weight", DEFAULT_WEIGHT),
        "timeout": suite.get("timeout"),
        "frac": suite.get("frac", 1.0),
        "seed": suite.get("seed", 0),
        "mutex": suite.get("mutex"),
    }
    if "rows" in suite:
        return [{**defaults, **row} for row in suite["rows"]]
    rows = []
    for prob in suite.get("problems", []):
        for spec in suite.get("specs", []):
            rows.append({**defaults, "problem": prob, "spec": spec})
    return rows


def run_row(row: dict) -> dict:
    out = {k: "" for k in CSV_COLUMNS}
    out["problem"], out["spec"] = row["problem"], row["spec"]
    try:
        problem = load_problem(row["problem"], None) if not row["problem"].endswith(".bsp") \
            else load_problem(None, row["problem"])
        spec = parse_spec(row["spec"], mutex=row.get("mutex"), fraction=row.get("frac", 1.0),
                          seed=row.get("seed", 0))
        timeout = row.get("timeout") or _default_timeout()
        res = run_one(problem, row.get("dir", "progress"), spec, row.get("weight", DEFAULT_WEIGHT),
                      timeout)
    except (UsageError, SpecError) as exc:
        out["status"] = f"error: {exc}"
        return out
    st = res.stats
    out.update(total_ms=f"{st.total_ms:.1f}", heuristic_ms=f"{st.heuristic_ms:.1f}",
               expanded=st.expanded)
    if res.status == "timeout":
        out["status"] = "TO"
    else:
        out["status"] = res.status
        if st.plan_len is not None:
            out["plan_len"] = st.plan_len
    return out


def cmd_bench(args) -> int:
    try:
        with open(args.suite) as fh:
            suite = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read suite: {exc}") from None
    rows = suite_rows(suite)
    if args.timeout is not None:
        for r in rows:
            r["timeout"] = args.timeout
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(run_row, rows))
    else:
        results = [run_row(r) for r in rows]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(results)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_SOLVED


# ----------------------------------------------------------------------
# hsnapshot


def snapshot(problem, direction: str = "regress", at: str | None = None, specs=None,
             cap: int = 200_000, mutex: str | None = None, frac: float = 1.0,
             seed: int = 0) -> dict:
    """Heuristic values at one belief state, plus the optimal distance."""
    at = at or ("goal" if direction == "regress" else "init")
    bs = problem.goal if at == "goal" else problem.init
    if direction == "regress":
        bs_p, bs_i = problem.init, bs
        start, target = problem.init, bs
    else:
        bs_p, bs_i = bs, problem.goal
        start, target = bs, problem.goal
    out: dict = {}
    for text in specs or SNAPSHOT_SPECS:
        spec = parse_spec(text, mutex=mutex, fraction=frac, seed=seed, direction=direction)
        out[text] = Heuristic(problem, spec).estimate(bs_p, bs_i)
    try:
        out["h*"] = bfs_oracle(problem, start, target, cap)
    except OracleCapExceeded:
        out["h*"] = None
    return out


def _fmt(v) -> str:
    if v is None:
        return "-"
    if v == INF:
        return "inf"
    if isinstance(v, float) and v.is_integer():
        return str(int(v))
    return str(v)


def cmd_hsnapshot(args) -> int:
    problem = load_problem(args.gen, args.file)
    specs = [s.strip() for s in args.specs.split(",")] if args.specs else None
    seed = args.seed if args.seed is not None else _default_seed()
    try:
        values = snapshot(problem, args.dir, args.at, specs, args.cap, args.mutex, args.frac, seed)
    except SpecError as exc:
        raise UsageError(str(exc)) from None
    if args.json:
        print(json.dumps({k: (None if v is None or v == INF else v)
                          for k, v in values.items()}))
    else:
        width = max(len(k) for k in values)
        for k, v in values.items():
            print(f"{k:<{width}}  {_fmt(v)}")
    return EXIT_SOLVED


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {"solve": cmd_solve, "bench": cmd_bench, "hsnapshot": cmd_hsnapshot}[args.command]
    try:
        return handler(args)
    except UsageError as exc:
        print(f"bsp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
