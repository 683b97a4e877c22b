"""Ground truth by brute-force simulation.

The oracle enumerates every start state of a small box and every iteration
count ``1..N``, runs the loop concretely and compares against a formula
``psi`` over ``x``, ``n`` and ``x'``:

* soundness (approx): ``psi(x, n, x')`` implies the loop runs ``n`` steps
  from ``x`` and ends in ``x'``;
* exactness (equiv): additionally every ``n``-step run satisfies ``psi``.

Formulas are compiled to integer arithmetic for speed; every witness is
re-verified with the exact rational evaluator before it is reported.
"""

from __future__ import annotations

import enum
import itertools
import time
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .expr import COUNTER
from .formula import Formula
from .loop import Loop

DEFAULT_LO = -8
DEFAULT_HI = 8
DEFAULT_MAX_N = 8


@dataclass(frozen=True)
class Box:
    """Start states ``lo <= x_i <= hi`` and iteration counts ``1..max_n``.

    ``intervals`` optionally overrides the bounds per variable.
    """

    lo: int = DEFAULT_LO
    hi: int = DEFAULT_HI
    max_n: int = DEFAULT_MAX_N
    intervals: Mapping[str, tuple[int, int]] = field(default_factory=dict)

    def __post_init__(self):
        if self.max_n < 1:
            raise ValueError("max_n must be at least 1")
        for lo, hi in [(self.lo, self.hi), *self.intervals.values()]:
            if lo > hi:
                raise ValueError(f"empty interval [{lo}, {hi}]")

    def bounds(self, var: str) -> tuple[int, int]:
        return self.intervals.get(var, (self.lo, self.hi))

    def states(self, vars: Sequence[str]):
        ranges = [range(lo, hi + 1) for lo, hi in map(self.bounds, vars)]
        for values in itertools.product(*ranges):
            yield dict(zip(vars, values))

    def size(self, vars: Sequence[str]) -> int:
        total = 1
        for lo, hi in map(self.bounds, vars):
            total *= hi - lo + 1
        return total


@dataclass(frozen=True)
class Blocked:
    """The guard failed before step ``step`` (0-based) could run."""

    step: int
    state: Mapping[str, int]


def run_n(loop: Loop, state: Mapping[str, int], n: int) -> dict[str, int] | Blocked:
    """``n`` guarded iterations from ``state``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    current = dict(state)
    for k in range(n):
        nxt = loop.step(current)
        if nxt is None:
            return Blocked(k, current)
        current = nxt
    return current


class Verdict(enum.Enum):
    APPROX_OK = "approx-ok"
    EXACT_OK = "exact-ok"
    SOUNDNESS_VIOLATION = "soundness-violation"
    EXACTNESS_VIOLATION = "exactness-violation"


@dataclass(frozen=True)
class Witness:
    state: Mapping[str, int]
    n: int
    post: Mapping[str, int]
    blocked_at: int | None = None

    def render(self) -> str:
        pre = ", ".join(f"{k}={v}" for k, v in self.state.items())
        post = ", ".join(f"{k}'={v}" for k, v in self.post.items())
        tail = f", blocked at step {self.blocked_at}" if self.blocked_at is not None else ""
        return f"{pre}, n={self.n}, {post}{tail}"


@dataclass(frozen=True)
class OracleReport:
    verdict: Verdict
    witness: Witness | None
    states_checked: int
    seconds: float

    @property
    def ok(self) -> bool:
        return self.witness is None

    def render(self) -> str:
        head = f"{self.verdict.value}: {self.states_checked} cases in {self.seconds:.2f}s"
        return head if self.witness is None else f"{head}; witness {self.witness.render()}"


def _compile(psi: Formula, names: list[str]):
    """Compile ``psi`` into a predicate over positional integer arguments."""
    clauses = []
    for clause in psi:
        clauses.append([a.expr.integer_evaluator(names)[0] for a in clause])

    def holds(*args) -> bool:
        return all(any(f(*args) > 0 for f in fs) for fs in clauses)

    return holds


def _compile_loop(loop: Loop):
    names = list(loop.vars)
    guard = _compile(loop.guard, names)
    update = []
    for e in loop.update:
        f, d = e.integer_evaluator(names)
        update.append((f, d))

    def succ(values: tuple[int, ...]) -> tuple[int, ...]:
        return tuple(f(*values) // d for f, d in update)

    return guard, succ


def _primed(loop: Loop) -> list[str]:
    return [v + "'" for v in loop.vars]


def _psi_env(loop: Loop, state, n: int, post) -> dict:
    env = dict(state)
    env[COUNTER] = n
    env.update({v + "'": post[v] for v in loop.vars})
    return env


def _confirm(loop: Loop, psi: Formula, w: Witness, soundness: bool) -> None:
    """Independent re-check of a witness with exact evaluation."""
    holds = psi.holds(_psi_env(loop, w.state, w.n, w.post))
    run = run_n(loop, w.state, w.n)
    reached = not isinstance(run, Blocked) and all(run[v] == w.post[v] for v in loop.vars)
    if soundness:
        ok = holds and not reached
    else:
        ok = reached and not holds
    if not ok:
        raise AssertionError(f"oracle witness failed re-verification: {w.render()}")


def _check(loop: Loop, psi: Formula, box: Box, exact: bool, post_box: tuple[int, int] | None) -> OracleReport:
    start = time.perf_counter()
    vars = list(loop.vars)
    names = vars + [COUNTER] + _primed(loop)
    holds = _compile(psi, names)
    guard, succ = _compile_loop(loop)
    if post_box is not None:
        post_values = list(itertools.product(range(post_box[0], post_box[1] + 1), repeat=len(vars)))
    checked = 0

    def report(verdict, state, n, post, blocked):
        w = Witness(dict(zip(vars, state)), n, dict(zip(vars, post)), blocked)
        _confirm(loop, psi, w, verdict is Verdict.SOUNDNESS_VIOLATION)
        return OracleReport(verdict, w, checked, time.perf_counter() - start)

    for st in box.states(vars):
        x = tuple(st.values())
        current = x
        blocked = None
        for n in range(1, box.max_n + 1):
            if blocked is None and not guard(*current):
                blocked = n - 1
            current = succ(current)
            runs = blocked is None
            checked += 1
            if holds(*x, n, *current):
                if not runs:
                    return report(Verdict.SOUNDNESS_VIOLATION, x, n, current, blocked)
            elif exact and runs:
                return report(Verdict.EXACTNESS_VIOLATION, x, n, current, None)
            if post_box is not None:
                for post in post_values:
                    if post != current and holds(*x, n, *post):
                        return report(Verdict.SOUNDNESS_VIOLATION, x, n, post, blocked)
    verdict = Verdict.EXACT_OK if exact else Verdict.APPROX_OK
    return OracleReport(verdict, None, checked, time.perf_counter() - start)


def check_approx(loop: Loop, psi: Formula, box: Box | None = None, post_box=None) -> OracleReport:
    """Every model of ``psi`` in the box must be an actual ``n``-step run.

    By default ``x'`` is fixed to the concrete ``n``-fold update of ``x``;
    ``post_box=(lo, hi)`` also scans every ``x'`` in that range.
    """
    return _check(loop, psi, box or Box(), False, post_box)


def check_exact(loop: Loop, psi: Formula, box: Box | None = None, post_box=None) -> OracleReport:
    """As :func:`check_approx`, and every ``n``-step run must satisfy ``psi``."""
    return _check(loop, psi, box or Box(), True, post_box)
