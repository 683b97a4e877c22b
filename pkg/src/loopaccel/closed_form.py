"""Closed forms ``a^n(x)`` for triangular updates.

Variables are solved in triangular order.  For ``x_i <- c*x_i + p_i`` with
``p_i`` over already solved variables, substituting their closed forms
turns ``p_i`` into a polynomial-exponential ``q(n)`` and

    x_i^(n) = c^n * x_i + sum_{j=0}^{n-1} c^(n-1-j) * q(j)

which holds for every ``n >= 0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Mapping

from .errors import DegreeCapExceeded, UnsupportedUpdate
from .expr import COUNTER, Key, PolyExp, is_integer_valued_on_integers, n_var
from .loop import Loop, Triangular, classify_update

DEFAULT_DEGREE_CAP = 8


@lru_cache(maxsize=None)
def _power_sum(k: int) -> PolyExp:
    """``S_k(n) = sum_{j=0}^{n-1} j^k`` via ``n^(k+1) = sum_i C(k+1, i) S_i(n)``."""
    n = n_var()
    acc = n ** (k + 1)
    for i in range(k):
        acc = acc - _power_sum(i) * comb(k + 1, i)
    return acc / (k + 1)


@lru_cache(maxsize=None)
def _exp_power_sum(base: int, k: int) -> PolyExp:
    """``T_k(n) = sum_{j=0}^{n-1} j^k base^j`` for ``base != 1``.

    Telescoping ``(j+1)^k base^(j+1) - j^k base^j`` gives
    ``(base-1) T_k = n^k base^n - [k == 0] - base * sum_{i<k} C(k, i) T_i``.
    """
    n = n_var()
    acc = n**k * PolyExp.exp(base)
    if k == 0:
        acc = acc - 1
    for i in range(k):
        acc = acc - _exp_power_sum(base, i) * (base * comb(k, i))
    return acc / (base - 1)


def _split_term(key: Key, coeff: Fraction) -> tuple[int, int, PolyExp]:
    """Separate a term into (base, power of n, remaining factor)."""
    base, mono = key
    k = 0
    rest = []
    for v, p in mono:
        if v == COUNTER:
            k = p
        else:
            rest.append((v, p))
    return base, k, PolyExp({(1, tuple(rest)): coeff})


def sum_closed(e: PolyExp, degree_cap: int = DEFAULT_DEGREE_CAP) -> PolyExp:
    """``F(n) = sum_{j=0}^{n-1} e(j)`` where ``e`` is read as a function of ``n``.

    Other variables are treated as parameters.
    """
    total = PolyExp()
    for key, coeff in e.terms:
        base, k, factor = _split_term(key, coeff)
        if k > degree_cap:
            raise DegreeCapExceeded(f"power n^{k} exceeds the degree cap {degree_cap}")
        kernel = _power_sum(k) if base == 1 else _exp_power_sum(base, k)
        total = total + factor * kernel
    return total


@lru_cache(maxsize=None)
def _weighted_kernel(c: int, base: int, k: int) -> PolyExp:
    """``U(n) = sum_{j=0}^{n-1} c^(n-1-j) j^k base^j`` for ``c`` not 0 or 1."""
    if base == c:
        return PolyExp.exp(c) * _power_sum(k) / c
    # U = P(n) base^n - P(0) c^n where base*P(n+1) - c*P(n) = n^k
    p = [Fraction(0)] * (k + 1)
    for i in range(k, -1, -1):
        rhs = Fraction(1 if i == k else 0)
        rhs -= base * sum(p[l] * comb(l, i) for l in range(i + 1, k + 1))
        p[i] = rhs / (base - c)
    n = n_var()
    poly = sum((n**i * coef for i, coef in enumerate(p)), PolyExp())
    return poly * PolyExp.exp(base) - PolyExp.exp(c) * p[0]


def weighted_sum(q: PolyExp, c: int, degree_cap: int = DEFAULT_DEGREE_CAP) -> PolyExp:
    """``sum_{j=0}^{n-1} c^(n-1-j) q(j)``."""
    if c == 1:
        return sum_closed(q, degree_cap)
    total = PolyExp()
    for key, coeff in q.terms:
        base, k, factor = _split_term(key, coeff)
        if k > degree_cap:
            raise DegreeCapExceeded(f"power n^{k} exceeds the degree cap {degree_cap}")
        total = total + factor * _weighted_kernel(c, base, k)
    return total


@dataclass(frozen=True)
class ClosedForm:
    vars: tuple[str, ...]
    components: tuple[PolyExp, ...]

    def as_map(self) -> dict[str, PolyExp]:
        return dict(zip(self.vars, self.components))

    def __getitem__(self, var: str) -> PolyExp:
        return self.components[self.vars.index(var)]

    def at(self, e) -> ClosedForm:
        """Instantiate the counter, e.g. ``cf.at(n - 1)`` for ``a^(n-1)(x)``."""
        return ClosedForm(self.vars, tuple(c.substitute({COUNTER: e}) for c in self.components))

    def apply(self, e: PolyExp) -> PolyExp:
        """``e(cf)``: substitute the components for the program variables."""
        return e.substitute(self.as_map())

    def evaluate(self, state: Mapping[str, int], n: int) -> dict[str, Fraction]:
        env = dict(state)
        env[COUNTER] = n
        return {v: c.evaluate(env) for v, c in zip(self.vars, self.components)}

    def is_identity_at_zero(self) -> bool:
        return all(c == PolyExp.var(v) for v, c in zip(self.vars, self.at(0).components))

    def render(self) -> str:
        return ", ".join(f"{v}' == {c}" for v, c in zip(self.vars, self.components))


def closed_form_at(cf: ClosedForm, e) -> ClosedForm:
    return cf.at(e)


def compute_closed_form(loop: Loop, degree_cap: int = DEFAULT_DEGREE_CAP) -> ClosedForm:
    shape = classify_update(loop)
    if not shape.supported:
        bad = [e.var for e in shape if not isinstance(e, Triangular)]
        raise UnsupportedUpdate(f"no triangular order for {', '.join(bad)}")
    solved: dict[str, PolyExp] = {}
    for entry in shape:
        q = entry.rest.substitute(solved)
        own = PolyExp.exp(entry.coeff) * PolyExp.var(entry.var)
        solved[entry.var] = own + weighted_sum(q, entry.coeff, degree_cap)
    cf = ClosedForm(loop.vars, tuple(solved[v] for v in loop.vars))
    assert cf.is_identity_at_zero(), "closed form must be the identity at n = 0"
    return cf


def closed_form_is_integer_valued(cf: ClosedForm) -> bool:
    return all(is_integer_valued_on_integers(c) for c in cf.components)
