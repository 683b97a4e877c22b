"""Acceleration of single-path integer loops into closed-form formulas."""

from .calculus import AccelConfig, AccelProblem, AccelResult, Stuck, accel_step, accelerate, canonical_problem
from .closed_form import ClosedForm, compute_closed_form, sum_closed
from .errors import (
    AccelError,
    ClassEscape,
    DegreeCapExceeded,
    LoopSyntaxError,
    NegativeExponent,
    ProtocolError,
    SemanticError,
    SolverSpawnError,
    UnboundVariable,
    UnsupportedUpdate,
)
from .expr import PolyExp, is_integer_valued_on_integers, render
from .formula import Atom, Clause, Formula
from .loop import Loop, classify_update
from .oracle import Box, OracleReport, check_approx, check_exact, run_n
from .smt import SmtClient, SolverConfig, Verdict, check_valid
from .syntax import load_loop, parse_expr, parse_formula, parse_loop, print_loop

__all__ = [
    "AccelConfig", "AccelError", "AccelProblem", "AccelResult", "Atom", "Box", "ClassEscape", "Clause",
    "ClosedForm", "DegreeCapExceeded", "Formula", "Loop", "LoopSyntaxError", "NegativeExponent",
    "OracleReport", "PolyExp", "ProtocolError", "SemanticError", "SmtClient", "SolverConfig",
    "SolverSpawnError", "Stuck", "UnboundVariable", "UnsupportedUpdate", "Verdict", "accel_step",
    "accelerate", "canonical_problem", "check_approx", "check_exact", "check_valid", "classify_update",
    "compute_closed_form", "is_integer_valued_on_integers", "load_loop", "parse_expr", "parse_formula",
    "parse_loop", "print_loop", "render", "run_n", "sum_closed",
]

__version__ = "0.1.0"
