"""Command-line front end.

    accel FILE              accelerate one loop and print the formula
    accel check FILE        accelerate, then validate against the oracle
    accel bench DIR         accelerate every ``*.loop`` file in DIR

Every flag can also be set through an ``ACCEL_*`` environment variable,
e.g. ``ACCEL_SMT_CMD`` for ``--solver`` or ``ACCEL_NO_EV_INC=1``.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
import threading
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .calculus import AccelConfig, AccelResult, accelerate, primed
from .errors import AccelError
from .expr import COUNTER, PolyExp, smt_quote, to_smt
from .formula import Atom, Clause
from .oracle import Box, Verdict, check_approx, check_exact
from .smt import SmtClient, SolverConfig
from .syntax import load_loop

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_STUCK = 2
EXIT_UNSOUND = 3
EXIT_INEXACT = 4


def _env(name: str, default=None):
    return os.environ.get("ACCEL_" + name, default)


def _env_flag(name: str) -> bool:
    return _env(name, "").lower() in ("1", "true", "yes", "on")


def _interval(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(p) for p in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}") from None
    if lo > hi:
        raise argparse.ArgumentTypeError(f"empty interval {text!r}")
    return lo, hi


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


class _Parser(argparse.ArgumentParser):
    # usage errors exit with the generic error code; 2 means "stuck"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--solver", default=_env("SMT_CMD", "z3 -in"), help="solver command line (default: z3 -in)")
    p.add_argument("--timeout-ms", type=_positive, default=int(_env("TIMEOUT_MS", 1000)), help="per-query timeout")
    p.add_argument("--no-ev-inc", action="store_true", default=_env_flag("NO_EV_INC"), help="disable eventual increase")
    p.add_argument("--no-ev-dec", action="store_true", default=_env_flag("NO_EV_DEC"), help="disable eventual decrease")
    p.add_argument("--trace", action="store_true", default=_env_flag("TRACE"), help="print the calculus steps")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser(command: str) -> argparse.ArgumentParser:
    if command == "check":
        p = _Parser(prog="accel check", description="Accelerate a loop and check it by simulation.")
        p.add_argument("file")
        p.add_argument("--box", type=_interval, default=_interval(_env("BOX", "-8:8")), help="start-state range LO:HI")
        p.add_argument("--max-n", type=_positive, default=int(_env("MAX_N", 8)), help="largest iteration count")
        p.add_argument("--post-box", type=_interval, default=None, help="also scan every x' in LO:HI")
    elif command == "bench":
        p = _Parser(prog="accel bench", description="Accelerate every .loop file in a directory.")
        p.add_argument("dir")
        p.add_argument("--csv", default=_env("CSV"), help="write per-file rows as CSV to this path ('-' for stdout)")
        p.add_argument("--jobs", type=_positive, default=int(_env("JOBS", os.cpu_count() or 1)))
    else:
        p = _Parser(
            prog="accel",
            description="Accelerate a single-path integer loop.",
            epilog="subcommands: 'accel check FILE', 'accel bench DIR'",
        )
        p.add_argument("file")
        p.add_argument("--format", choices=("human", "smt2"), default=_env("FORMAT", "human"))
        p.add_argument("--expand-n", type=_positive, default=int(_env("EXPAND_N", 0)) or None,
                       help="ground n to 1..K so exponentials can be emitted as SMT-LIB2")
    _common(p)
    return p


def config_from(args) -> AccelConfig:
    return AccelConfig(
        enable_ev_dec=not args.no_ev_dec,
        enable_ev_inc=not args.no_ev_inc,
        solver=SolverConfig(args.solver, args.timeout_ms),
    )


# -- output ---------------------------------------------------------------


def banner(result: AccelResult) -> str:
    if not result.solved:
        return "STUCK"
    return "EXACT" if result.exact else "APPROX"


def render_trace(result: AccelResult) -> str:
    lines = []
    for i, step in enumerate(result.trace, 1):
        lines.append(f"  {i}. {step.render()}")
    if not result.solved:
        lines.append(f"  stuck on {result.pending.render()}")
        for q in result.stuck_queries:
            lines.append(f"     {q.render()}")
    return "\n".join(lines)


def _equality(lhs: str, e: PolyExp) -> str:
    d = e.denominator()
    rhs = to_smt(e * d)
    return f"(= {lhs} {rhs})" if d == 1 else f"(= (* {d} {lhs}) {rhs})"


def _ground(result: AccelResult, k: int | None) -> list[str]:
    """SMT terms for the closed-form equalities and constraints, with n := k if given."""
    sub = {} if k is None else {COUNTER: k}
    terms = []
    for v, c in zip(result.closed_form.vars, result.closed_form.components):
        terms.append(_equality(smt_quote(primed(v)), c.substitute(sub)))
    for clause in result.constraints:
        terms.append(clause.to_smt() if k is None else clause_at(clause, sub))
    return terms


def clause_at(clause: Clause, sub) -> str:
    return Clause(Atom(a.expr.substitute(sub)) for a in clause).to_smt()


def render_smt2(result: AccelResult, expand_n: int | None) -> str:
    exponential = any(c.has_exponential() for c in result.closed_form.components) or any(
        a.expr.has_exponential() for a in result.constraints.atoms()
    )
    if exponential and expand_n is None:
        raise AccelError("formula has exponentials; use --expand-n K to ground n in 1..K")
    vars = result.loop.vars
    out = [f"; {banner(result)}", "(set-logic QF_NIA)"]
    for name in [COUNTER, *vars, *(primed(v) for v in vars)]:
        out.append(f"(declare-const {smt_quote(name)} Int)")
    out.append(f"(assert (> {smt_quote(COUNTER)} 0))")
    if expand_n is None:
        out.extend(f"(assert {t})" for t in _ground(result, None))
    else:
        n = smt_quote(COUNTER)
        cases = [f"(and (= {n} {k}) {' '.join(_ground(result, k))})" for k in range(1, expand_n + 1)]
        out.append(f"(assert (or {' '.join(cases)}))")
    return "\n".join(out) + "\n"


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_ERROR


# -- commands -------------------------------------------------------------


def cmd_accelerate(args) -> int:
    try:
        result = accelerate(load_loop(args.file), config_from(args))
        text = render_smt2(result, args.expand_n) if args.format == "smt2" else None
    except (AccelError, OSError) as exc:
        return _fail(str(exc))
    if text is not None:
        sys.stdout.write(text)
    else:
        print(banner(result))
        print(result.render())
        if not result.solved:
            print(f"pending: {result.pending.render()}")
    if args.trace:
        print(render_trace(result), file=sys.stderr if text is not None else sys.stdout)
    return EXIT_OK if result.solved else EXIT_STUCK


def cmd_check(args) -> int:
    try:
        result = accelerate(load_loop(args.file), config_from(args))
    except (AccelError, OSError) as exc:
        return _fail(str(exc))
    print(banner(result))
    print(result.render())
    if args.trace:
        print(render_trace(result))
    if not result.solved:
        return EXIT_STUCK
    box = Box(args.box[0], args.box[1], args.max_n)
    psi = result.formula()
    approx = check_approx(result.loop, psi, box, args.post_box)
    print(f"soundness: {approx.render()}")
    if approx.verdict is Verdict.SOUNDNESS_VIOLATION:
        return EXIT_UNSOUND
    exact = check_exact(result.loop, psi, box)
    print(f"exactness: {exact.render()}")
    if result.exact and exact.verdict is Verdict.EXACTNESS_VIOLATION:
        return EXIT_INEXACT
    return EXIT_OK


@dataclass
class RunStats:
    file: str
    outcome: str
    exact: bool
    steps: int
    ms: float
    techniques: Counter = field(default_factory=Counter)
    error: str = ""

    def technique_list(self) -> str:
        return ";".join(f"{t}:{k}" for t, k in sorted(self.techniques.items()))


def run_one(path: Path, config: AccelConfig, smt: SmtClient) -> RunStats:
    start = time.perf_counter()
    try:
        result = accelerate(load_loop(path), config, smt)
    except (AccelError, OSError) as exc:
        ms = (time.perf_counter() - start) * 1000
        return RunStats(path.name, "fail", False, 0, ms, error=f"{type(exc).__name__}: {exc}")
    ms = (time.perf_counter() - start) * 1000
    return RunStats(
        path.name,
        result.outcome,
        result.solved and result.exact,
        result.steps,
        ms,
        Counter(result.techniques()),
    )


def bench(directory, config: AccelConfig, jobs: int = 1) -> list[RunStats]:
    """Accelerate every ``*.loop`` file; results are ordered by file name."""
    files = sorted(Path(directory).glob("*.loop"))
    local = threading.local()
    clients: list[SmtClient] = []
    lock = threading.Lock()

    def work(path: Path) -> RunStats:
        smt = getattr(local, "smt", None)
        if smt is None:
            smt = local.smt = SmtClient(config.solver)
            with lock:
                clients.append(smt)
        # a solver that died mid-query is restarted by the next query
        return run_one(path, config, smt)

    try:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(work, files))
    finally:
        for smt in clients:
            smt.close()


def summary(rows: list[RunStats]) -> dict:
    counts = Counter(r.outcome for r in rows)
    avg = sum(r.ms for r in rows) / len(rows) if rows else 0.0
    return {"exact": counts["exact"], "approx": counts["approx"], "fail": counts["fail"], "avg_ms": avg}


def format_table(rows: list[RunStats]) -> str:
    width = max([len("file"), *(len(r.file) for r in rows)])
    lines = [f"{'file':<{width}}  {'outcome':<7} {'steps':>5} {'ms':>8}  techniques"]
    for r in rows:
        detail = r.technique_list() or r.error
        lines.append(f"{r.file:<{width}}  {r.outcome:<7} {r.steps:>5} {r.ms:>8.1f}  {detail}")
    s = summary(rows)
    lines.append("")
    lines.append(f"{'exact':<8}{s['exact']:>6}")
    lines.append(f"{'approx':<8}{s['approx']:>6}")
    lines.append(f"{'fail':<8}{s['fail']:>6}")
    lines.append(f"{'avg rt':<8}{s['avg_ms']:>6.1f} ms")
    return "\n".join(lines)


CSV_FIELDS = ("file", "outcome", "exact", "steps", "ms", "techniques")


def format_csv(rows: list[RunStats]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in rows:
        w.writerow([r.file, r.outcome, str(r.exact).lower(), r.steps, f"{r.ms:.1f}", r.technique_list()])
    return buf.getvalue()


def cmd_bench(args) -> int:
    if not Path(args.dir).is_dir():
        return _fail(f"not a directory: {args.dir}")
    rows = bench(args.dir, config_from(args), args.jobs)
    print(format_table(rows))
    if args.csv:
        text = format_csv(rows)
        if args.csv == "-":
            sys.stdout.write(text)
        else:
            Path(args.csv).write_text(text, encoding="utf-8")
    return EXIT_OK


COMMANDS = {"check": cmd_check, "bench": cmd_bench}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    command = argv[0] if argv and argv[0] in COMMANDS else "accelerate"
    if command != "accelerate":
        argv = argv[1:]
    args = build_parser(command).parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handler = COMMANDS.get(command, cmd_accelerate)
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
