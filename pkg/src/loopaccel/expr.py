"""Exact polynomial-exponential expressions.

A :class:`PolyExp` is a finite sum of terms ``c * m * B^n`` where ``c`` is a
rational coefficient, ``m`` a monomial over variable names with non-negative
integer powers and ``B^n`` an optional exponential in the iteration counter
``n`` with a non-zero integer base.  Exponents of the form ``k*n + m`` are
normalised on construction: ``B^(k*n+m) = B^m * (B^k)^n``, so the only
exponent ever stored is ``n`` itself and structural equality coincides with
algebraic equality.

Values are immutable and hashable.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb, factorial, lcm
from numbers import Rational
from typing import Callable, Iterable, Mapping, Union

from .errors import ClassEscape, NegativeExponent, UnboundVariable

COUNTER = "n"

Monomial = tuple[tuple[str, int], ...]
Key = tuple[int, Monomial]
Number = Union[int, Fraction]


def _var_order(name: str) -> tuple[bool, str]:
    # the counter is printed after program variables
    return (name == COUNTER, name)


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    powers = dict(a)
    for v, k in b:
        powers[v] = powers.get(v, 0) + k
    return tuple(sorted(powers.items()))


class PolyExp:
    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Key, Number] | None = None):
        items = []
        if terms:
            for key, c in terms.items():
                if c:
                    items.append((key, Fraction(c)))
        items.sort(key=lambda kv: kv[0])
        self._terms: tuple[tuple[Key, Fraction], ...] = tuple(items)
        if not items:
            self._hash = hash(0)
        elif len(items) == 1 and items[0][0] == (1, ()):
            self._hash = hash(items[0][1])
        else:
            self._hash = hash(self._terms)

    # -- constructors -------------------------------------------------

    @classmethod
    def const(cls, c: Number) -> PolyExp:
        return cls({(1, ()): c})

    @classmethod
    def var(cls, name: str) -> PolyExp:
        return cls({(1, ((name, 1),)): 1})

    @classmethod
    def exp(cls, base: int) -> PolyExp:
        """``base^n`` for an integer base."""
        if base == 0:
            raise ClassEscape("exponential base 0 has no closed form for n = 0")
        if base == 1:
            return cls.const(1)
        return cls({(base, ()): 1})

    # -- inspection ---------------------------------------------------

    @property
    def terms(self) -> tuple[tuple[Key, Fraction], ...]:
        return self._terms

    def variables(self) -> frozenset[str]:
        names = set()
        for (base, mono), _ in self._terms:
            if base != 1:
                names.add(COUNTER)
            names.update(v for v, _ in mono)
        return frozenset(names)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(key == (1, ()) for key, _ in self._terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError(f"{self} is not constant")
        return self._terms[0][1] if self._terms else Fraction(0)

    def constant_term(self) -> Fraction:
        for key, c in self._terms:
            if key == (1, ()):
                return c
        return Fraction(0)

    def has_exponential(self) -> bool:
        return any(base != 1 for (base, _), _ in self._terms)

    def bases(self) -> frozenset[int]:
        return frozenset(base for (base, _), _ in self._terms)

    def degree(self, name: str | None = None) -> int:
        """Total polynomial degree, or the degree in ``name``; exponentials count as 0."""
        best = 0
        for (_, mono), _ in self._terms:
            if name is None:
                d = sum(k for _, k in mono)
            else:
                d = dict(mono).get(name, 0)
            best = max(best, d)
        return best

    def denominator(self) -> int:
        """Least common multiple of all coefficient denominators."""
        return lcm(*(c.denominator for _, c in self._terms)) if self._terms else 1

    def coefficient(self, key: Key) -> Fraction:
        for k, c in self._terms:
            if k == key:
                return c
        return Fraction(0)

    # -- arithmetic ---------------------------------------------------

    def _acc(self, into: dict, scale: Fraction = Fraction(1)) -> None:
        for key, c in self._terms:
            into[key] = into.get(key, 0) + c * scale

    def __add__(self, other) -> PolyExp:
        other = as_polyexp(other)
        acc: dict = {}
        self._acc(acc)
        other._acc(acc)
        return PolyExp(acc)

    __radd__ = __add__

    def __neg__(self) -> PolyExp:
        return PolyExp({key: -c for key, c in self._terms})

    def __sub__(self, other) -> PolyExp:
        other = as_polyexp(other)
        acc: dict = {}
        self._acc(acc)
        other._acc(acc, Fraction(-1))
        return PolyExp(acc)

    def __rsub__(self, other) -> PolyExp:
        return as_polyexp(other) - self

    def __mul__(self, other) -> PolyExp:
        if isinstance(other, (int, Rational)):
            return PolyExp({key: c * other for key, c in self._terms})
        other = as_polyexp(other)
        acc: dict = {}
        for (b1, m1), c1 in self._terms:
            for (b2, m2), c2 in other._terms:
                key = (b1 * b2, _mono_mul(m1, m2))
                acc[key] = acc.get(key, 0) + c1 * c2
        return PolyExp(acc)

    __rmul__ = __mul__

    def __truediv__(self, other) -> PolyExp:
        if not isinstance(other, (int, Rational)) or other == 0:
            return NotImplemented
        return self * (Fraction(1) / Fraction(other))

    def __pow__(self, k: int) -> PolyExp:
        if not isinstance(k, int) or k < 0:
            raise ClassEscape("only non-negative integer powers are supported")
        result = PolyExp.const(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, PolyExp):
            return self._terms == other._terms
        if isinstance(other, (int, Rational)):
            return self._terms == PolyExp.const(other)._terms
        return NotImplemented

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other: PolyExp) -> bool:
        # arbitrary but total; used only to sort containers deterministically
        return self._terms < other._terms

    # -- substitution and evaluation -----------------------------------

    def substitute(self, mapping: Mapping[str, object]) -> PolyExp:
        """Simultaneously replace variables by expressions.

        Replacing the counter inside an exponential is only possible with an
        image ``k*n + m`` where ``k >= 0`` and ``m`` are integers.
        """
        if not mapping:
            return self
        images = {v: as_polyexp(e) for v, e in mapping.items()}
        counter_image = images.get(COUNTER)
        powers: dict[tuple[str, int], PolyExp] = {}
        exps: dict[int, PolyExp] = {}
        acc: dict = {}
        for (base, mono), c in self._terms:
            factor = PolyExp.const(c)
            if base != 1:
                if counter_image is None:
                    factor = factor * PolyExp.exp(base)
                else:
                    if base not in exps:
                        exps[base] = _exp_at(base, counter_image)
                    factor = factor * exps[base]
            kept = []
            for v, k in mono:
                if v in images:
                    if (v, k) not in powers:
                        powers[(v, k)] = images[v] ** k
                    factor = factor * powers[(v, k)]
                else:
                    kept.append((v, k))
            if kept:
                factor = factor * PolyExp({(1, tuple(kept)): 1})
            factor._acc(acc)
        return PolyExp(acc)

    def evaluate(self, assignment: Mapping[str, Number]) -> Fraction:
        total = Fraction(0)
        for (base, mono), c in self._terms:
            value = c
            if base != 1:
                n = _lookup(assignment, COUNTER)
                if n < 0:
                    raise NegativeExponent(f"{base}^n evaluated at n = {n}")
                value *= Fraction(base) ** n
            for v, k in mono:
                value *= Fraction(_lookup(assignment, v)) ** k
            total += value
        return total

    def integer_evaluator(self, names: Iterable[str]) -> tuple[Callable[..., int], int]:
        """Compile ``D * self`` to a fast integer function of ``names``.

        Returns ``(f, D)`` with ``D > 0`` the coefficient denominator, so
        ``self(values) == f(*values) / D``.  The counter must be non-negative
        when exponentials are present; the compiled code does not check it.
        """
        names = list(names)
        idents = {name: f"v{i}" for i, name in enumerate(names)}
        missing = self.variables() - set(names)
        if missing:
            raise UnboundVariable(sorted(missing)[0])
        D = self.denominator()
        parts = []
        for (base, mono), c in self._terms:
            factors = [str(int(c * D))]
            if base != 1:
                factors.append(f"({base})**{idents[COUNTER]}")
            for v, k in mono:
                factors.append(idents[v] if k == 1 else f"{idents[v]}**{k}")
            parts.append("*".join(factors))
        src = f"lambda {', '.join(idents[n] for n in names)}: {' + '.join(parts) or '0'}"
        return eval(src, {"__builtins__": {}}), D  # noqa: S307 - generated from our own terms

    # -- rendering ----------------------------------------------------

    def __str__(self) -> str:
        return render(self)

    def __repr__(self) -> str:
        return f"PolyExp({render(self)!r})"


def as_polyexp(value) -> PolyExp:
    if isinstance(value, PolyExp):
        return value
    if isinstance(value, (int, Rational)):
        return PolyExp.const(value)
    if isinstance(value, str):
        return PolyExp.var(value)
    raise TypeError(f"cannot convert {type(value).__name__} to PolyExp")


def _lookup(assignment: Mapping[str, Number], name: str) -> Number:
    try:
        return assignment[name]
    except KeyError:
        raise UnboundVariable(name) from None


def _exp_at(base: int, image: PolyExp) -> PolyExp:
    """``base^image`` where ``image`` must be ``k*n + m`` with integer ``k >= 0``."""
    slope = Fraction(0)
    offset = Fraction(0)
    for (b, mono), c in image.terms:
        if b == 1 and mono == ():
            offset = c
        elif b == 1 and mono == ((COUNTER, 1),):
            slope = c
        else:
            raise ClassEscape(f"exponent {image} is not linear in {COUNTER}")
    if slope.denominator != 1 or offset.denominator != 1:
        raise ClassEscape(f"exponent {image} has non-integer coefficients")
    if slope < 0:
        raise ClassEscape(f"exponent {image} decreases with {COUNTER}")
    k, m = int(slope), int(offset)
    if k == 0 and m < 0:
        raise ClassEscape(f"constant negative exponent {m}")
    scale = Fraction(base) ** m
    return PolyExp.exp(base**k) * scale


def n_var() -> PolyExp:
    return PolyExp.var(COUNTER)


# -- integer-valuedness ---------------------------------------------------


def _stirling2(k: int, i: int) -> int:
    return sum((-1) ** (i - j) * comb(i, j) * j**k for j in range(i + 1)) // factorial(i)


def is_integer_valued_on_integers(e: PolyExp) -> bool:
    """Decide whether ``e`` maps every integer assignment (``n >= 0``) to an integer.

    Program variables are moved into the binomial basis ``C(x, i)``; a
    function is integer valued iff every coefficient function of ``n`` in
    that basis is.  Each such coefficient ``g(n)`` is a rational combination
    of ``n^j B^n``; ``D*g`` has integer coefficients, so ``g(n) mod 1`` is
    eventually periodic and a finite scan of ``n`` decides it.
    """
    if all(c.denominator == 1 for _, c in e.terms):
        return True
    # coefficient functions of n, keyed by the binomial multi-index
    blocks: dict[tuple[tuple[str, int], ...], dict] = {}
    for (base, mono), c in e.terms:
        n_power = 0
        expansions: list[tuple[tuple[tuple[str, int], ...], Fraction]] = [((), Fraction(c))]
        for v, k in mono:
            if v == COUNTER:
                n_power = k
                continue
            nxt = []
            for idx, coef in expansions:
                for i in range(1, k + 1):
                    w = _stirling2(k, i) * factorial(i)
                    nxt.append((idx + ((v, i),), coef * w))
            expansions = nxt
        for idx, coef in expansions:
            block = blocks.setdefault(idx, {})
            key = (base, ((COUNTER, n_power),) if n_power else ())
            block[key] = block.get(key, 0) + coef
    for block in blocks.values():
        g = PolyExp(block)
        if not _integer_valued_in_counter(g):
            return False
    return True


def _integer_valued_in_counter(g: PolyExp) -> bool:
    D = g.denominator()
    if D == 1:
        return True
    preperiod, period = 0, 1
    for base in g.bases():
        if base == 1:
            continue
        seen: dict[int, int] = {}
        value, i = 1 % D, 0
        while value not in seen:
            seen[value] = i
            value = (value * base) % D
            i += 1
        preperiod = max(preperiod, seen[value])
        period = lcm(period, i - seen[value])
    f, scale = g.integer_evaluator([COUNTER])
    bound = preperiod + lcm(D, period)
    return all(f(n) % scale == 0 for n in range(bound))


# -- rendering ------------------------------------------------------------


def _is_counter_only(key: Key) -> bool:
    base, mono = key
    return base == 1 and all(v == COUNTER for v, _ in mono)


def _factor_body(key: Key, magnitude: Fraction, shift: int, ntok: str) -> str:
    base, mono = key
    offset = shift
    if base > 1 and magnitude.denominator > 1:
        k, d = 0, magnitude.denominator
        while d % base == 0:
            d //= base
            k += 1
        if d == 1:
            magnitude = magnitude * Fraction(base) ** k
            offset += k
    factors = []
    for v, k in sorted(mono, key=lambda vk: _var_order(vk[0])):
        name = ntok if v == COUNTER else v
        factors.append(name if k == 1 else f"{name}^{k}")
    if base != 1:
        b = str(base) if base > 0 else f"({base})"
        factors.append(f"{b}^n" if offset == 0 else f"{b}^(n-{offset})")
    if magnitude != 1 or not factors:
        factors.insert(0, str(magnitude))
    return "*".join(factors)


def _join(pieces: list[tuple[bool, str]], compact: bool) -> str:
    out = []
    for i, (negative, body) in enumerate(pieces):
        if i == 0:
            out.append(f"-{body}" if negative else body)
        elif compact:
            out.append(f"{'-' if negative else '+'}{body}")
        else:
            out.append(f" {'-' if negative else '+'} {body}")
    return "".join(out) or "0"


def render(e: PolyExp) -> str:
    """Human-readable form in the loop input syntax (``* ^ /`` and parentheses).

    Expressions that become markedly shorter when written in terms of
    ``n-1`` (typical for guards instantiated before the last iteration)
    are printed that way.
    """
    shift = 0
    if COUNTER in e.variables():
        shifted = e.substitute({COUNTER: n_var() + 1})
        if len(shifted.terms) + 2 <= len(e.terms):
            e, shift = shifted, 1
    ntok = COUNTER if shift == 0 else f"({COUNTER}-{shift})"
    counter_terms = [(k, c) for k, c in e.terms if _is_counter_only(k)]
    other_terms = [(k, c) for k, c in e.terms if not _is_counter_only(k)]
    other_terms.sort(
        key=lambda kc: (
            -sum(p for _, p in kc[0][1]),
            [(_var_order(v), -p) for v, p in sorted(kc[0][1], key=lambda vp: _var_order(vp[0]))],
            kc[0][0],
        )
    )
    pieces: list[tuple[bool, str]] = []
    fraction = len(counter_terms) >= 2 and any(c.denominator != 1 for _, c in counter_terms)
    if fraction:
        D = lcm(*(c.denominator for _, c in counter_terms))
        numerator = []
        for key, c in counter_terms:  # ascending degree
            body = _factor_body(key, abs(c * D), 0, ntok)
            if body == ntok and c > 0 and shift:
                body = body[1:-1]
            numerator.append((c < 0, body))
        pieces.append((False, f"({_join(numerator, compact=True)})/{D}"))
    for key, c in other_terms:
        pieces.append((c < 0, _factor_body(key, abs(c), shift, ntok)))
    if not fraction:
        for key, c in reversed(counter_terms):
            pieces.append((c < 0, _factor_body(key, abs(c), 0, ntok)))
    return _join(pieces, compact=False)


def smt_quote(name: str) -> str:
    return f"|{name}|"


def smt_int(value: int) -> str:
    return str(value) if value >= 0 else f"(- {-value})"


def to_smt(e: PolyExp) -> str:
    """SMT-LIB2 term for ``e``; coefficients must be integers and no exponentials occur."""
    parts = []
    for (base, mono), c in e.terms:
        if base != 1:
            raise ClassEscape("exponential terms cannot be sent to the solver")
        if c.denominator != 1:
            raise ValueError("scale rational coefficients before SMT rendering")
        coef = int(c)
        factors = [smt_quote(v) for v, k in mono for _ in range(k)]
        if not factors:
            parts.append(smt_int(coef))
        elif coef == 1 and len(factors) == 1:
            parts.append(factors[0])
        elif coef == 1:
            parts.append(f"(* {' '.join(factors)})")
        else:
            parts.append(f"(* {smt_int(coef)} {' '.join(factors)})")
    if not parts:
        return "0"
    if len(parts) == 1:
        return parts[0]
    return f"(+ {' '.join(parts)})"
