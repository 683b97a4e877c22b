"""CNF formulas over strict integer atoms ``p > 0``.

Clauses and formulas behave as sets (equality and hashing ignore order and
duplicates) but remember insertion order, which the calculus uses as the
deterministic clause-selection order and which keeps rendering stable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

from .errors import EmptySelection
from .expr import Number, PolyExp, render, to_smt


@dataclass(frozen=True)
class Atom:
    """``expr > 0``."""

    expr: PolyExp

    def holds(self, assignment: Mapping[str, Number]) -> bool:
        return self.expr.evaluate(assignment) > 0

    def variables(self) -> frozenset[str]:
        return self.expr.variables()

    def render(self) -> str:
        return f"{render(self.expr)} > 0"

    def to_smt(self) -> str:
        scaled = self.expr * self.expr.denominator()
        return f"(> {to_smt(scaled)} 0)"

    def __str__(self) -> str:
        return self.render()


def _dedup(items: Iterable) -> tuple:
    return tuple(dict.fromkeys(items))


class Clause:
    """Non-empty disjunction of atoms."""

    __slots__ = ("atoms", "_key")

    def __init__(self, atoms: Iterable[Atom]):
        self.atoms: tuple[Atom, ...] = _dedup(atoms)
        if not self.atoms:
            raise ValueError("a clause needs at least one atom")
        self._key = frozenset(self.atoms)

    def __eq__(self, other) -> bool:
        return isinstance(other, Clause) and self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __iter__(self):
        return iter(self.atoms)

    def __len__(self) -> int:
        return len(self.atoms)

    def holds(self, assignment) -> bool:
        return any(a.holds(assignment) for a in self.atoms)

    def render(self) -> str:
        if len(self.atoms) == 1:
            return self.atoms[0].render()
        return "(" + " || ".join(a.render() for a in self.atoms) + ")"

    def to_smt(self) -> str:
        if len(self.atoms) == 1:
            return self.atoms[0].to_smt()
        return f"(or {' '.join(a.to_smt() for a in self.atoms)})"

    def __repr__(self) -> str:
        return f"Clause({self.render()!r})"


class Formula:
    """Conjunction of clauses; the empty formula is ``true``."""

    __slots__ = ("clauses", "_key")

    def __init__(self, clauses: Iterable[Clause] = ()):
        self.clauses: tuple[Clause, ...] = _dedup(clauses)
        self._key = frozenset(self.clauses)

    @classmethod
    def true(cls) -> Formula:
        return cls()

    @classmethod
    def of_atoms(cls, exprs: Iterable[PolyExp | Atom]) -> Formula:
        """Conjunction of single-atom clauses."""
        return cls(Clause([e if isinstance(e, Atom) else Atom(e)]) for e in exprs)

    def __eq__(self, other) -> bool:
        return isinstance(other, Formula) and self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __iter__(self):
        return iter(self.clauses)

    def __len__(self) -> int:
        return len(self.clauses)

    def __bool__(self) -> bool:
        # truthiness means "has clauses"; use is_true() for the logical reading
        return bool(self.clauses)

    def __contains__(self, clause: Clause) -> bool:
        return clause in self._key

    def is_true(self) -> bool:
        return not self.clauses

    def is_conjunctive(self) -> bool:
        return all(len(c) == 1 for c in self.clauses)

    def atoms(self) -> tuple[Atom, ...]:
        return _dedup(a for c in self.clauses for a in c)

    def variables(self) -> frozenset[str]:
        names: set[str] = set()
        for a in self.atoms():
            names |= a.variables()
        return frozenset(names)

    def issubset(self, other: Formula) -> bool:
        return self._key <= other._key

    def conj(self, other: Formula) -> Formula:
        return Formula(self.clauses + other.clauses)

    __and__ = conj

    def diff(self, other: Formula) -> Formula:
        return Formula(c for c in self.clauses if c not in other._key)

    __sub__ = diff

    def holds(self, assignment: Mapping[str, Number]) -> bool:
        return all(c.holds(assignment) for c in self.clauses)

    def map_atoms(self, f: Callable[[PolyExp], PolyExp]) -> Formula:
        return Formula(Clause(Atom(f(a.expr)) for a in c) for c in self.clauses)

    def render(self) -> str:
        if not self.clauses:
            return "true"
        return " && ".join(c.render() for c in self.clauses)

    def to_smt(self) -> str:
        if not self.clauses:
            return "true"
        if len(self.clauses) == 1:
            return self.clauses[0].to_smt()
        return f"(and {' '.join(c.to_smt() for c in self.clauses)})"

    def __str__(self) -> str:
        return self.render()

    def __repr__(self) -> str:
        return f"Formula({self.render()!r})"


def conj(*formulas: Formula) -> Formula:
    out = Formula.true()
    for f in formulas:
        out = out.conj(f)
    return out


def clause_subset(phi: Formula, chi: Formula) -> Formula:
    """Validate a clause selection ``chi`` from ``phi`` and return it."""
    if chi.is_true():
        raise EmptySelection("selection must contain at least one clause")
    if not chi.issubset(phi):
        raise EmptySelection(f"{chi} is not a subset of {phi}")
    return chi


def clause_diff(phi: Formula, chi: Formula) -> Formula:
    return phi.diff(chi)


def eval_formula(phi: Formula, assignment: Mapping[str, Number]) -> bool:
    return phi.holds(assignment)


def map_atoms(phi: Formula, f: Callable[[PolyExp], PolyExp]) -> Formula:
    return phi.map_atoms(f)


def geq(lhs, rhs) -> Atom:
    """``lhs >= rhs`` over the integers, as the strict atom ``lhs - rhs + 1 > 0``."""
    return Atom(lhs - rhs + 1)


def equality_atoms(lhs, rhs) -> tuple[Atom, Atom]:
    """``lhs == rhs`` over the integers as two strict atoms."""
    return geq(lhs, rhs), geq(rhs, lhs)

