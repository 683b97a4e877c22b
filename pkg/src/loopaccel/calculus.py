"""The acceleration calculus.

An acceleration problem ``[[psi | processed | pending]]`` starts with
``psi = (x' = a^n(x))``, nothing processed and the whole guard pending.
Each step moves one pending clause to ``processed`` and conjoins the
formula produced by the first applicable technique.  The problem is solved
once nothing is pending.

Selection order: pending clauses are visited in guard order and each one
tries the monotonicity techniques (invariant first, then converse
invariant).  Only when no clause admits either are the eventual-monotonicity
tiers tried, ev-dec over all clauses before ev-inc.  Every successful step
restarts the search from the top since a larger processed set can unlock
higher-priority techniques.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Mapping

from .closed_form import DEFAULT_DEGREE_CAP, ClosedForm, compute_closed_form
from .errors import AccelError
from .expr import PolyExp, render
from .formula import Atom, Clause, Formula, equality_atoms
from .loop import Loop
from .smt import SmtClient, SolverConfig
from .techniques import EV_DEC, EV_INC, MONO_DEC, MONO_INC, TECHNIQUES, QueryRecord, TechniqueOutcome


def primed(var: str) -> str:
    return var + "'"


@dataclass(frozen=True)
class TraceStep:
    clause: Clause
    technique: str
    psi2: Formula
    exact: bool
    queries: tuple[QueryRecord, ...]

    def render(self) -> str:
        mode = "exact" if self.exact else "approx"
        return f"{self.technique} on {self.clause.render()} ({mode}): {self.psi2.render()}"


@dataclass(frozen=True)
class AccelProblem:
    loop: Loop
    closed_form: ClosedForm
    constraints: Formula
    processed: Formula
    pending: Formula
    exact: bool = True
    trace: tuple[TraceStep, ...] = ()

    @property
    def solved(self) -> bool:
        return self.pending.is_true()

    def check_partition(self) -> None:
        guard = self.loop.guard
        both = self.processed & self.pending
        if both != guard or len(both) != len(self.processed) + len(self.pending):
            raise AssertionError("processed and pending must partition the guard")

    def psi(self) -> Formula:
        return closed_form_equalities(self.closed_form) & self.constraints


class Stuck(AccelError):
    """No technique applies to any pending clause."""

    def __init__(self, problem: AccelProblem, queries: tuple[QueryRecord, ...]):
        super().__init__(f"no technique applies to {problem.pending.render()}")
        self.problem = problem
        self.queries = queries


@dataclass(frozen=True)
class AccelConfig:
    enable_mono: bool = True
    enable_ev_dec: bool = True
    enable_ev_inc: bool = True
    degree_cap: int = DEFAULT_DEGREE_CAP
    solver: SolverConfig = field(default_factory=SolverConfig)

    def tiers(self) -> list[tuple[str, ...]]:
        """Technique groups in priority order; a group is tried clause by clause."""
        tiers = []
        if self.enable_mono:
            tiers.append((MONO_INC, MONO_DEC))
        if self.enable_ev_dec:
            tiers.append((EV_DEC,))
        if self.enable_ev_inc:
            tiers.append((EV_INC,))
        return tiers


def closed_form_equalities(cf: ClosedForm) -> Formula:
    atoms: list[Atom] = []
    for v, c in zip(cf.vars, cf.components):
        atoms.extend(equality_atoms(PolyExp.var(primed(v)), c))
    return Formula.of_atoms(atoms)


def canonical_problem(loop: Loop, cf: ClosedForm) -> AccelProblem:
    return AccelProblem(loop, cf, Formula.true(), Formula.true(), loop.guard)


def accel_step(problem: AccelProblem, smt, config: AccelConfig | None = None) -> AccelProblem:
    """One calculus step; raises :class:`Stuck` when nothing applies."""
    config = config or AccelConfig()
    if problem.solved:
        raise ValueError("problem is already solved")
    queries: list[QueryRecord] = []
    for tier in config.tiers():
        for clause in problem.pending:
            chi = Formula([clause])
            for tid in tier:
                result = TECHNIQUES[tid](chi, problem.processed, problem.loop, problem.closed_form, smt)
                queries.extend(result.queries)
                if isinstance(result, TechniqueOutcome):
                    return _apply(problem, clause, result)
    raise Stuck(problem, tuple(queries))


def _apply(problem: AccelProblem, clause: Clause, outcome: TechniqueOutcome) -> AccelProblem:
    step = TraceStep(clause, outcome.technique, outcome.psi2, outcome.exact, outcome.queries)
    chi = Formula([clause])
    nxt = replace(
        problem,
        constraints=problem.constraints & outcome.psi2,
        processed=problem.processed & chi,
        pending=problem.pending - chi,
        exact=problem.exact and outcome.exact,
        trace=problem.trace + (step,),
    )
    nxt.check_partition()
    return nxt


@dataclass(frozen=True)
class AccelResult:
    loop: Loop
    closed_form: ClosedForm
    constraints: Formula
    exact: bool
    solved: bool
    pending: Formula
    trace: tuple[TraceStep, ...]
    stuck_queries: tuple[QueryRecord, ...] = ()
    seconds: float = 0.0

    @property
    def steps(self) -> int:
        return len(self.trace)

    @property
    def outcome(self) -> str:
        if not self.solved:
            return "fail"
        return "exact" if self.exact else "approx"

    def techniques(self) -> list[str]:
        return [s.technique for s in self.trace]

    def formula(self) -> Formula:
        """The full ``psi`` over ``x``, ``n`` and ``x'``."""
        return closed_form_equalities(self.closed_form) & self.constraints

    def holds(self, state: Mapping[str, int], n: int, post: Mapping[str, int]) -> bool:
        env = dict(state)
        env["n"] = n
        env.update({primed(v): post[v] for v in self.loop.vars})
        return self.formula().holds(env)

    def render(self) -> str:
        parts = [f"{primed(v)} == {render(c)}" for v, c in zip(self.closed_form.vars, self.closed_form.components)]
        parts.extend(c.render() for c in self.constraints)
        return " && ".join(parts)


def accelerate(loop: Loop, config: AccelConfig | None = None, smt: SmtClient | None = None) -> AccelResult:
    """Run the calculus to a solved or stuck problem.

    Raises :class:`UnsupportedUpdate` for updates without closed form and
    propagates solver errors.
    """
    config = config or AccelConfig()
    start = time.perf_counter()
    cf = compute_closed_form(loop, config.degree_cap)
    own = smt is None
    if own:
        smt = SmtClient(config.solver)
    try:
        problem = canonical_problem(loop, cf)
        limit = len(loop.guard)
        stuck: tuple[QueryRecord, ...] = ()
        while not problem.solved:
            try:
                problem = accel_step(problem, smt, config)
            except Stuck as exc:
                stuck = exc.queries
                break
            assert len(problem.trace) <= limit, "more steps than guard clauses"
    finally:
        if own:
            smt.close()
    return AccelResult(
        loop,
        cf,
        problem.constraints,
        problem.exact,
        problem.solved,
        problem.pending,
        problem.trace,
        stuck,
        time.perf_counter() - start,
    )
