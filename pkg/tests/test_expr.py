from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from loopaccel.errors import ClassEscape, NegativeExponent, UnboundVariable
from loopaccel.expr import PolyExp, is_integer_valued_on_integers, n_var, render, to_smt
from loopaccel.syntax import parse_expr

x1, x2, x3 = (PolyExp.var(v) for v in ("x1", "x2", "x3"))
n = n_var()
VARS = ("x1", "x2", "n")


def P(text):
    return parse_expr(text)


# -- examples --------------------------------------------------------------


def test_additive_inverse():
    assert (x1 - n) + n == x1


def test_exponent_law_against_evaluation():
    e = (PolyExp.exp(2) * x2) * 2
    assert e == P("2^(n+1)*x2")
    for k in range(6):
        assert e.evaluate({"x2": 3, "n": k}) == 3 * 2 ** (k + 1)


def test_self_difference_is_zero():
    e = x1 + x2
    assert (e - e).is_zero()
    assert e - e == 0


def test_substitute_counter_shift():
    assert (x1 - n).substitute({"n": n - 1}) == P("x1 - n + 1")


def test_substitute_counter_zero():
    assert (PolyExp.exp(2) * x2).substitute({"n": 0}) == x2


def test_substitute_is_simultaneous():
    e = (x1 + x2).substitute({"x1": x1 + x2, "x2": x2 - 1})
    assert e == x1 + 2 * x2 - 1
    for a, b in [(0, 0), (3, -2), (-7, 5)]:
        assert e.evaluate({"x1": a, "x2": b}) == (a + b) + (b - 1)


def test_substitute_rejects_variable_exponent():
    with pytest.raises(ClassEscape):
        PolyExp.exp(2).substitute({"n": x1})


def test_substitute_rejects_negative_constant_exponent():
    with pytest.raises(ClassEscape):
        PolyExp.exp(2).substitute({"n": -1})


def test_evaluate_ev_dec_closed_form():
    e = P("(n - n^2)/2 + x2*n + x1")
    assert e.evaluate({"x1": 1, "x2": 0, "n": 2}) == 0


def test_evaluate_exponential():
    assert (PolyExp.exp(2) * x2).evaluate({"x2": 3, "n": 4}) == 48


def test_evaluate_cubic_component():
    # x3 after three steps of (x1+1, x2-x1, x3+x2) from (0, 0, 5):
    # (0,0,5) -> (1,0,5) -> (2,-1,5) -> (3,-3,4)
    e = P("-1/6*n^3 + (1 - x1)/2*n^2 + (x1/2 + x2 - 1/3)*n + x3")
    assert e.evaluate({"x1": 0, "x2": 0, "x3": 5, "n": 3}) == 4


def test_evaluate_errors():
    with pytest.raises(NegativeExponent):
        PolyExp.exp(2).evaluate({"n": -1})
    with pytest.raises(UnboundVariable):
        (x1 + x2).evaluate({"x1": 1})


def test_integer_valued_examples():
    assert is_integer_valued_on_integers(P("(n - n^2)/2 + x2*n + x1"))
    assert not is_integer_valued_on_integers(P("n/2"))
    assert is_integer_valued_on_integers(P("-1/6*n^3 + 1/2*n^2 - 1/3*n"))
    cubic = P("-1/6*n^3 + 1/2*n^2 - 1/3*n")
    assert all(cubic.evaluate({"n": k}).denominator == 1 for k in range(7))


def test_integer_valued_exponential_parts():
    assert is_integer_valued_on_integers(P("(3^n - 1)/2"))
    assert not is_integer_valued_on_integers(P("(3^n - 1)/4"))
    assert is_integer_valued_on_integers(P("x1*(x1 + 1)/2"))
    assert not is_integer_valued_on_integers(P("x1*x2/2"))


def test_render_shapes():
    assert render(P("(n - n^2)/2 + x2*n + x1")) == "(n-n^2)/2 + x2*n + x1"
    assert render(P("x1 - n + 1")) == "x1 - n + 1"
    assert render(P("x2*2^n")) == "x2*2^n"
    assert render(P("x2*2^(n-1)")) == "x2*2^(n-1)"
    assert render(P("(n-1-(n-1)^2)/2 + x2*(n-1) + x1")) == "(n-1-(n-1)^2)/2 + x2*(n-1) + x1"
    assert render(PolyExp()) == "0"


def test_smt_rendering():
    assert to_smt(P("x1 - 2*x2 + 3")) == "(+ 3 |x1| (* (- 2) |x2|))"
    with pytest.raises(ClassEscape):
        to_smt(PolyExp.exp(2))


# -- properties -----------------------------------------------------------


def _poly(depth=2):
    leaf = st.one_of(
        st.integers(-4, 4).map(PolyExp.const),
        st.sampled_from(VARS).map(PolyExp.var),
        st.sampled_from([2, 3, -1]).map(PolyExp.exp),
    )
    return st.recursive(
        leaf,
        lambda inner: st.one_of(
            st.tuples(inner, inner).map(lambda t: t[0] + t[1]),
            st.tuples(inner, inner).map(lambda t: t[0] - t[1]),
            st.tuples(inner, inner).map(lambda t: t[0] * t[1]),
            st.tuples(inner, st.integers(1, 3)).map(lambda t: t[0] / t[1]),
        ),
        max_leaves=6,
    )


polys = _poly()
assignments = st.fixed_dictionaries({"x1": st.integers(-6, 6), "x2": st.integers(-6, 6), "n": st.integers(0, 6)})


@settings(max_examples=150, deadline=None)
@given(polys, polys, polys, assignments)
def test_ring_laws(a, b, c, env):
    assert a + b == b + a
    assert a * b == b * a
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a - a == 0
    assert ((a + b) * c).evaluate(env) == (a.evaluate(env) + b.evaluate(env)) * c.evaluate(env)


@settings(max_examples=100, deadline=None)
@given(polys, polys, polys, assignments)
def test_substitution_commutes_with_evaluation(e, s1, s2, env):
    sub = {"x1": s1, "x2": s2}
    inner = {"x1": s1.evaluate(env), "x2": s2.evaluate(env), "n": env["n"]}
    assert e.substitute(sub).evaluate(env) == e.evaluate(inner)


@settings(max_examples=100, deadline=None)
@given(polys, polys, polys)
def test_substitution_is_a_homomorphism(a, b, s):
    sub = {"x2": s}
    assert (a + b).substitute(sub) == a.substitute(sub) + b.substitute(sub)
    assert (a * b).substitute(sub) == a.substitute(sub) * b.substitute(sub)
    assert a.substitute({}) == a
    assert a.substitute({"x1": x1, "n": n}) == a


@settings(max_examples=150, deadline=None)
@given(polys)
def test_render_reparses(e):
    assert P(render(e)) == e
    assert PolyExp(dict(e.terms)) == e  # canonicalisation is idempotent


@settings(max_examples=100, deadline=None)
@given(polys, st.lists(st.tuples(st.integers(-5, 5), st.integers(-5, 5), st.integers(0, 7)), min_size=1, max_size=12))
def test_integer_valued_has_no_false_positives(e, points):
    if is_integer_valued_on_integers(e):
        for a, b, k in points:
            assert e.evaluate({"x1": a, "x2": b, "n": k}).denominator == 1


@settings(max_examples=100, deadline=None)
@given(polys, assignments)
def test_compiled_evaluator_agrees(e, env):
    f, d = e.integer_evaluator(VARS)
    assert Fraction(f(*(env[v] for v in VARS)), d) == e.evaluate(env)
