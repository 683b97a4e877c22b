"""Conditional acceleration techniques.

Each technique accelerates a selected clause set ``chi`` of the guard,
assuming the run already satisfies the processed condition ``processed``
for ``n`` steps.  On success it returns the formula ``psi2`` that the
calculus conjoins to its partial result; the ``x' = a^n(x)`` part is owned
by the calculus.

Side-conditions mention only ``x``, ``a(x)`` and ``a(a(x))``, all computed
by substitution so that solver queries stay polynomial.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .closed_form import ClosedForm
from .expr import PolyExp, n_var
from .formula import Atom, Clause, Formula, geq
from .loop import Loop
from .smt import SmtClient, Verdict

MONO_INC = "mono-inc"
MONO_DEC = "mono-dec"
EV_DEC = "ev-dec"
EV_INC = "ev-inc"

# highest priority first
PRIORITY = (MONO_INC, MONO_DEC, EV_DEC, EV_INC)


@dataclass(frozen=True)
class QueryRecord:
    technique: str
    premise: Formula
    conclusion: Formula
    verdict: Verdict

    def render(self) -> str:
        return f"[{self.technique}] {self.premise} ==> {self.conclusion}: {self.verdict}"


@dataclass(frozen=True)
class TechniqueOutcome:
    technique: str
    chi: Formula
    psi2: Formula
    exact: bool
    queries: tuple[QueryRecord, ...] = ()


@dataclass(frozen=True)
class NotApplicable:
    technique: str
    chi: Formula
    queries: tuple[QueryRecord, ...] = ()
    reason: str = ""


Result = TechniqueOutcome | NotApplicable


@dataclass
class _Context:
    technique: str
    chi: Formula
    smt: SmtClient
    queries: list[QueryRecord] = field(default_factory=list)

    def valid(self, premise: Formula, conclusion: Formula) -> bool:
        verdict = self.smt.check_valid(premise, conclusion)
        self.queries.append(QueryRecord(self.technique, premise, conclusion, verdict))
        # only a definite Valid licenses a step; Unknown never does
        return verdict.is_valid

    def success(self, psi2: Formula, exact: bool) -> TechniqueOutcome:
        return TechniqueOutcome(self.technique, self.chi, psi2, exact, tuple(self.queries))

    def failure(self, reason: str = "") -> NotApplicable:
        return NotApplicable(self.technique, self.chi, tuple(self.queries), reason)


def previous_iterate(cf: ClosedForm) -> dict[str, PolyExp]:
    """``a^(n-1)(x)`` as a substitution map."""
    return cf.at(n_var() - 1).as_map()


def _single_atoms(chi: Formula) -> list[PolyExp] | None:
    if not all(len(c) == 1 for c in chi):
        return None
    return [c.atoms[0].expr for c in chi]


def try_monotonic_increase(chi, processed, loop: Loop, cf: ClosedForm, smt) -> Result:
    """``processed && chi ==> chi(a(x))`` gives ``chi`` itself, exactly."""
    ctx = _Context(MONO_INC, chi, smt)
    if not ctx.valid(processed & chi, loop.apply_formula(chi)):
        return ctx.failure("chi is not invariant")
    return ctx.success(chi, True)


def try_monotonic_decrease(chi, processed, loop: Loop, cf: ClosedForm, smt) -> Result:
    """``processed && chi(a(x)) ==> chi`` gives ``chi(a^(n-1)(x))``, exactly."""
    ctx = _Context(MONO_DEC, chi, smt)
    if not ctx.valid(processed & loop.apply_formula(chi), chi):
        return ctx.failure("chi is not a converse invariant")
    prev = previous_iterate(cf)
    return ctx.success(chi.map_atoms(lambda e: e.substitute(prev)), True)


def _eventual(
    technique: str,
    chi: Formula,
    processed: Formula,
    loop: Loop,
    smt,
    trend: Callable[[PolyExp, PolyExp], Atom],
    contribute: Callable[[PolyExp, PolyExp], list[PolyExp]],
    exact: bool,
) -> Result:
    ctx = _Context(technique, chi, smt)
    exprs = _single_atoms(chi)
    if exprs is None:
        return ctx.failure("clauses must be single atoms")
    out: list[PolyExp] = []
    for e in exprs:
        e1 = loop.apply(e)
        e2 = loop.apply(e1)
        premise = processed & Formula([Clause([trend(e, e1)])])
        conclusion = Formula([Clause([trend(e1, e2)])])
        if not ctx.valid(premise, conclusion):
            return ctx.failure(f"{e} is not eventually monotonic")
        out.extend(contribute(e, e1))
    return ctx.success(Formula.of_atoms(out), exact)


def try_eventual_decrease(chi, processed, loop: Loop, cf: ClosedForm, smt) -> Result:
    """Once ``e`` stops growing it never grows again: check both endpoints."""
    prev = previous_iterate(cf)
    return _eventual(
        EV_DEC,
        chi,
        processed,
        loop,
        smt,
        trend=geq,
        contribute=lambda e, e1: [e, e.substitute(prev)],
        exact=True,
    )


def try_eventual_increase(chi, processed, loop: Loop, cf: ClosedForm, smt) -> Result:
    """Once ``e`` starts growing it keeps growing: ``0 < e <= e(a(x))`` suffices."""
    return _eventual(
        EV_INC,
        chi,
        processed,
        loop,
        smt,
        trend=lambda p, q: geq(q, p),
        contribute=lambda e, e1: [e, geq(e1, e).expr],
        exact=False,
    )


TECHNIQUES = {
    MONO_INC: try_monotonic_increase,
    MONO_DEC: try_monotonic_decrease,
    EV_DEC: try_eventual_decrease,
    EV_INC: try_eventual_increase,
}
