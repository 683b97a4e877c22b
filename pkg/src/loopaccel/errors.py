"""Exception hierarchy shared by all loopaccel modules."""

from __future__ import annotations


class AccelError(Exception):
    """Base class for every error raised by loopaccel."""


class ClassEscape(AccelError):
    """An operation would leave the polynomial-exponential expression class."""


class NegativeExponent(AccelError):
    """An exponential was evaluated at a negative counter value."""


class UnboundVariable(AccelError, KeyError):
    """An assignment does not cover a variable of the evaluated expression."""

    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self) -> str:
        return f"no value for variable {self.name!r}"


class EmptySelection(AccelError, ValueError):
    """A clause selection was empty or not contained in the source formula."""


class LoopSyntaxError(AccelError):
    def __init__(self, message: str, pos: int, expected: tuple[str, ...] = (), text: str = ""):
        self.pos = pos
        self.expected = tuple(expected)
        self.line, self.col = _line_col(text, pos)
        detail = f"{message} at line {self.line}, column {self.col}"
        if self.expected:
            detail += f" (expected {' or '.join(self.expected)})"
        super().__init__(detail)


class SemanticError(AccelError):
    """Well-formed input that does not describe a supported loop."""


class UnsupportedUpdate(AccelError):
    """The update has no triangular form, so no closed form can be computed."""


class DegreeCapExceeded(AccelError):
    pass


class SolverSpawnError(AccelError):
    pass


class ProtocolError(AccelError):
    """The solver process replied with something unexpected or died."""


def _line_col(text: str, pos: int) -> tuple[int, int]:
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col
