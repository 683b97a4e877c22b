"""Shared checks used by several test modules."""

from loopaccel.calculus import AccelResult
from loopaccel.formula import Formula
from loopaccel.loop import Loop
from loopaccel.oracle import Blocked, Box, run_n


def with_guard(loop: Loop, guard: Formula) -> Loop:
    return Loop(loop.vars, guard, loop.update)


def step_contexts(result: AccelResult):
    """(chi, processed, outcome step) for every step of a calculus run."""
    processed = Formula.true()
    for step in result.trace:
        chi = Formula([step.clause])
        yield chi, processed, step
        processed = processed & chi


def check_technique(loop: Loop, chi: Formula, processed: Formula, psi2: Formula, exact: bool, box: Box = Box()):
    """Brute-force the soundness (and, if claimed, exactness) clause of one step.

    Soundness: a run of ``<processed, a>`` whose start satisfies ``psi2`` is a
    run of ``<chi, a>``.  Exactness: every run of ``<chi && processed, a>``
    satisfies ``psi2``.  Returns the first failing ``(state, n)`` or None.
    """
    under_processed = with_guard(loop, processed)
    under_chi = with_guard(loop, chi)
    under_both = with_guard(loop, chi & processed)
    for state in box.states(loop.vars):
        for n in range(1, box.max_n + 1):
            env = dict(state, n=n)
            holds = psi2.holds(env)
            if holds and not isinstance(run_n(under_processed, state, n), Blocked):
                if isinstance(run_n(under_chi, state, n), Blocked):
                    return ("unsound", state, n)
            if exact and not holds and not isinstance(run_n(under_both, state, n), Blocked):
                return ("inexact", state, n)
    return None
