"""Single-path loops ``while guard do x <- update`` and their update shape."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import SemanticError
from .expr import COUNTER, PolyExp, is_integer_valued_on_integers
from .formula import Formula

RESERVED = frozenset({COUNTER, "vars", "guard", "update", "true"})


@dataclass(frozen=True)
class Loop:
    vars: tuple[str, ...]
    guard: Formula
    update: tuple[PolyExp, ...]

    def __post_init__(self):
        object.__setattr__(self, "vars", tuple(self.vars))
        object.__setattr__(self, "update", tuple(self.update))
        if not self.vars:
            raise SemanticError("a loop needs at least one variable")
        if len(set(self.vars)) != len(self.vars):
            raise SemanticError("variables must be pairwise distinct")
        for v in self.vars:
            if v in RESERVED or v.endswith("'"):
                raise SemanticError(f"{v!r} cannot be used as a program variable")
        if len(self.update) != len(self.vars):
            raise SemanticError("update needs exactly one expression per variable")
        declared = set(self.vars)
        for v, e in zip(self.vars, self.update):
            unknown = e.variables() - declared
            if unknown:
                raise SemanticError(f"update of {v} uses undeclared variable {sorted(unknown)[0]}")
            if not is_integer_valued_on_integers(e):
                raise SemanticError(f"update of {v} does not map integers to integers")
        unknown = self.guard.variables() - declared
        if unknown:
            raise SemanticError(f"guard uses undeclared variable {sorted(unknown)[0]}")
        if not self.guard.is_conjunctive():
            raise SemanticError("only conjunctive guards are supported")

    @property
    def dim(self) -> int:
        return len(self.vars)

    def update_map(self) -> dict[str, PolyExp]:
        return dict(zip(self.vars, self.update))

    def apply(self, e: PolyExp) -> PolyExp:
        """``e(a(x))`` by substitution."""
        return e.substitute(self.update_map())

    def apply_formula(self, phi: Formula) -> Formula:
        mapping = self.update_map()
        return phi.map_atoms(lambda e: e.substitute(mapping))

    def successor(self, state: Mapping[str, int]) -> dict[str, int]:
        """``a(state)`` regardless of the guard."""
        out = {}
        for v, e in zip(self.vars, self.update):
            value = e.evaluate(state)
            assert value.denominator == 1
            out[v] = int(value)
        return out

    def step(self, state: Mapping[str, int]) -> dict[str, int] | None:
        """One guarded iteration; ``None`` when the guard blocks."""
        if not self.guard.holds(state):
            return None
        return self.successor(state)


@dataclass(frozen=True)
class Triangular:
    """``x_i <- coeff * x_i + rest`` with ``rest`` over previously solved variables."""

    var: str
    coeff: int
    rest: PolyExp


@dataclass(frozen=True)
class Unsupported:
    var: str


@dataclass(frozen=True)
class UpdateShape:
    entries: tuple[Triangular | Unsupported, ...] = field(default_factory=tuple)

    @property
    def supported(self) -> bool:
        return all(isinstance(e, Triangular) for e in self.entries)

    @property
    def order(self) -> tuple[str, ...]:
        return tuple(e.var for e in self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)


def _split_self(var: str, e: PolyExp, solved: set[str]) -> Triangular | None:
    """Write ``e`` as ``c*var + rest`` with ``c`` a non-zero integer and ``rest`` over ``solved``."""
    if not e.variables() <= solved | {var}:
        return None
    coeff = Fraction(0)
    rest = {}
    for key, c in e.terms:
        base, mono = key
        if dict(mono).get(var):
            if key != (1, ((var, 1),)):
                return None
            coeff = c
        else:
            rest[key] = c
    if coeff == 0 or coeff.denominator != 1:
        return None
    return Triangular(var, int(coeff), PolyExp(rest))


def classify_update(loop: Loop) -> UpdateShape:
    """Find a solving order making the update triangular.

    Greedy: repeatedly take the first unsolved variable whose update is
    ``c*x + p(solved)``.  Taking a variable never blocks another one, so
    the greedy choice finds an order whenever one exists.  Variables left
    over are reported as :class:`Unsupported` in declaration order.
    """
    mapping = loop.update_map()
    solved: set[str] = set()
    entries: list[Triangular | Unsupported] = []
    remaining = list(loop.vars)
    progress = True
    while remaining and progress:
        progress = False
        for v in remaining:
            tri = _split_self(v, mapping[v], solved)
            if tri is not None:
                entries.append(tri)
                solved.add(v)
                remaining.remove(v)
                progress = True
                break
    entries.extend(Unsupported(v) for v in remaining)
    return UpdateShape(tuple(entries))


def step(loop: Loop, state: Mapping[str, int]) -> dict[str, int] | None:
    return loop.step(state)


def make_loop(vars: Sequence[str], guard: Formula, update: Mapping[str, PolyExp]) -> Loop:
    """Build a loop; variables missing from ``update`` keep their value."""
    return Loop(tuple(vars), guard, tuple(update.get(v, PolyExp.var(v)) for v in vars))
