"""Text format for loops and formulas.

Loop files follow::

    vars x1 x2;
    guard x1 > 0 && x2 > 0;
    update x1 = x1 - 1, x2 = x2 + 1;

Expressions use ``+ - * ^`` with integer literal exponents.  The formula
syntax used for printed results additionally accepts primed variables,
division by integer literals and exponentials ``B^n`` / ``B^(n-1)`` with an
integer base.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ClassEscape, LoopSyntaxError, SemanticError
from .expr import COUNTER, PolyExp, render
from .formula import Atom, Formula, equality_atoms, geq
from .loop import Loop, make_loop

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*'?)
  | (?P<op>>=|<=|==|&&|[-+*^/(),;=<>])
    """,
    re.VERBOSE,
)

_COMPARISONS = (">", ">=", "<", "<=", "==")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise LoopSyntaxError(f"unexpected character {text[pos]!r}", pos, (), text)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(Token("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, extended: bool):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0
        self.extended = extended

    # -- token helpers ------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def error(self, message: str, expected=()) -> LoopSyntaxError:
        return LoopSyntaxError(message, self.tok.pos, tuple(expected), self.text)

    def accept(self, text: str) -> bool:
        if self.tok.text == text and self.tok.kind in ("op", "ident"):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        tok = self.tok
        if not self.accept(text):
            shown = tok.text or "end of input"
            raise self.error(f"unexpected {shown!r}", (repr(text),))
        return tok

    def ident(self) -> str:
        tok = self.tok
        if tok.kind != "ident":
            raise self.error(f"unexpected {tok.text or 'end of input'!r}", ("identifier",))
        if tok.text.endswith("'") and not self.extended:
            raise self.error("primed variables are not allowed here", ("identifier",))
        self.i += 1
        return tok.text

    # -- expressions --------------------------------------------------

    def expr(self) -> PolyExp:
        e = self.term()
        while self.tok.text in ("+", "-"):
            op = self.tok.text
            self.i += 1
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self) -> PolyExp:
        e = self.unary()
        while True:
            if self.accept("*"):
                e = e * self.unary()
            elif self.extended and self.tok.text == "/":
                self.i += 1
                tok = self.tok
                if tok.kind != "int" or int(tok.text) == 0:
                    raise self.error("division only by a non-zero integer literal", ("integer",))
                self.i += 1
                e = e / int(tok.text)
            else:
                return e

    def unary(self) -> PolyExp:
        if self.accept("-"):
            return -self.unary()
        return self.power()

    def power(self) -> PolyExp:
        start = self.tok
        base = self.primary()
        if not self.accept("^"):
            return base
        tok = self.tok
        if tok.kind == "int":
            self.i += 1
            return base ** int(tok.text)
        if not self.extended:
            raise self.error("exponents must be integer literals", ("integer",))
        exponent = self.primary()
        if exponent.is_constant():
            k = exponent.constant_value()
            if k.denominator != 1 or k < 0:
                raise self.error("exponent must be a non-negative integer")
            return base ** int(k)
        if not base.is_constant() or base.constant_value().denominator != 1:
            raise LoopSyntaxError(
                "exponentials need an integer base", start.pos, ("integer",), self.text
            )
        try:
            return PolyExp.exp(int(base.constant_value())).substitute({COUNTER: exponent})
        except ClassEscape as exc:
            raise LoopSyntaxError(str(exc), tok.pos, (), self.text) from None

    def primary(self) -> PolyExp:
        tok = self.tok
        if tok.kind == "int":
            self.i += 1
            return PolyExp.const(int(tok.text))
        if tok.kind == "ident" and tok.text not in ("vars", "guard", "update", "true"):
            return PolyExp.var(self.ident())
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        raise self.error(
            f"unexpected {tok.text or 'end of input'!r}", ("integer", "identifier", "'('")
        )

    # -- formulas -----------------------------------------------------

    def comparison(self) -> list[Atom]:
        lhs = self.expr()
        op = self.tok.text
        if op not in _COMPARISONS and not (self.extended and op == "="):
            raise self.error(f"unexpected {op or 'end of input'!r}", tuple(repr(c) for c in _COMPARISONS))
        self.i += 1
        rhs = self.expr()
        if op == ">":
            return [Atom(lhs - rhs)]
        if op == "<":
            return [Atom(rhs - lhs)]
        if op == ">=":
            return [geq(lhs, rhs)]
        if op == "<=":
            return [geq(rhs, lhs)]
        return list(equality_atoms(lhs, rhs))

    def conjunction(self) -> Formula:
        if self.accept("true"):
            return Formula.true()
        atoms = self.comparison()
        while self.accept("&&"):
            atoms += self.comparison()
        return Formula.of_atoms(atoms)

    def end(self) -> None:
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r}", ("end of input",))

    # -- loops --------------------------------------------------------

    def loop(self) -> Loop:
        self.expect("vars")
        names = [self.ident()]
        while self.tok.kind == "ident" and self.tok.text != "guard":
            names.append(self.ident())
        self.expect(";")
        self.expect("guard")
        guard = self.conjunction()
        self.expect(";")
        self.expect("update")
        updates: dict[str, PolyExp] = {}
        while True:
            target = self.tok
            name = self.ident()
            if name in updates:
                raise SemanticError(f"{name} is updated twice (position {target.pos})")
            if name not in names:
                raise SemanticError(f"update of undeclared variable {name}")
            self.expect("=")
            updates[name] = self.expr()
            if not self.accept(","):
                break
        self.expect(";")
        self.end()
        return make_loop(names, guard, updates)


def parse_expr(text: str, extended: bool = True) -> PolyExp:
    p = _Parser(text, extended)
    e = p.expr()
    p.end()
    return e


def parse_formula(text: str) -> Formula:
    """Parse a conjunction of comparisons in the extended (result) syntax."""
    p = _Parser(text, extended=True)
    phi = p.conjunction()
    p.end()
    return phi


def parse_loop(text: str) -> Loop:
    return _Parser(text, extended=False).loop()


def load_loop(path) -> Loop:
    with open(path, encoding="utf-8") as fh:
        return parse_loop(fh.read())


def print_loop(loop: Loop) -> str:
    guard = " && ".join(f"{render(a.expr)} > 0" for a in loop.guard.atoms()) or "true"
    updates = ", ".join(f"{v} = {render(e)}" for v, e in zip(loop.vars, loop.update))
    return f"vars {' '.join(loop.vars)};\nguard {guard};\nupdate {updates};\n"

