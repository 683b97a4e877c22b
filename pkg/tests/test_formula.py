import pytest
from hypothesis import given, settings, strategies as st

from loopaccel.closed_form import compute_closed_form
from loopaccel.errors import EmptySelection
from loopaccel.expr import PolyExp, n_var
from loopaccel.formula import Atom, Clause, Formula, clause_diff, clause_subset, conj, eval_formula, geq, map_atoms
from loopaccel.syntax import parse_formula
from loopaccel.techniques import previous_iterate

from conftest import corpus_loop

x1, x2 = PolyExp.var("x1"), PolyExp.var("x2")
F = parse_formula


def test_clause_diff_after_selection():
    pending = F("x1 > 0 && x2 > 0")
    chi = clause_subset(pending, F("x1 > 0"))
    assert clause_diff(pending, chi) == F("x2 > 0")


def test_self_difference_is_true():
    phi = F("x1 > 0 && x2 > 0")
    assert (phi - phi).is_true()
    assert (phi - phi).render() == "true"


def test_conj_is_union():
    assert conj(F("x1 > 0"), F("x2 > 0")) == F("x1 > 0 && x2 > 0")
    assert conj(F("x1 > 0"), F("x1 > 0")) == F("x1 > 0")


def test_empty_selection_rejected():
    with pytest.raises(EmptySelection):
        clause_subset(F("x1 > 0"), Formula.true())
    with pytest.raises(EmptySelection):
        clause_subset(F("x1 > 0"), F("x2 > 0"))


def test_eval_examples():
    phi = F("x1 > 0 && x2 > 0")
    assert eval_formula(phi, {"x1": 1, "x2": 1})
    assert not eval_formula(phi, {"x1": 1, "x2": 0})


def test_eval_non_dec_result():
    psi = F("x1' == x1 - n && x2' == x2 + n && x1 - n + 1 > 0 && x2 > 0")
    assert psi.holds({"x1": 2, "x2": 1, "n": 2, "x1'": 0, "x2'": 3})
    assert not psi.holds({"x1": 2, "x2": 1, "n": 3, "x1'": -1, "x2'": 4})


def test_map_atoms_examples():
    assert map_atoms(F("x1 > 0"), lambda e: e.substitute({"x1": x1 - n_var()})) == F("x1 - n > 0")
    phi = F("x1 > 0 && x2 > 0")
    assert map_atoms(phi, lambda e: e) == phi
    prev = previous_iterate(compute_closed_form(corpus_loop("exp")))
    guard = corpus_loop("exp").guard
    assert guard.map_atoms(lambda e: e.substitute(prev)) == F("x1 - n + 1 > 0")


def test_set_semantics():
    a, b = Atom(x1), Atom(x2)
    assert Clause([a, b]) == Clause([b, a, a])
    assert Formula([Clause([a]), Clause([b])]) == Formula([Clause([b]), Clause([a]), Clause([b])])
    assert hash(Clause([a, b])) == hash(Clause([b, a]))
    with pytest.raises(ValueError):
        Clause([])


def test_disjunctive_rendering_and_smt():
    phi = Formula([Clause([Atom(x1), Atom(x2 - 1)]), Clause([Atom(x1 / 2)])])
    assert phi.render() == "(x1 > 0 || x2 - 1 > 0) && 1/2*x1 > 0"
    assert phi.to_smt() == "(and (or (> |x1| 0) (> (+ (- 1) |x2|) 0)) (> |x1| 0))"
    assert not phi.is_conjunctive()


def test_comparison_desugaring():
    assert F("x1 >= x2") == Formula([Clause([geq(x1, x2)])])
    assert F("x1 < 3") == F("3 - x1 > 0")
    assert F("x1 <= 3") == F("4 - x1 > 0")
    assert F("x1 == 2") == F("x1 - 1 > 0 && 3 - x1 > 0")


small = st.integers(-6, 6)


@settings(max_examples=200, deadline=None)
@given(small, small)
def test_integer_encodings(a, b):
    env = {"x1": a, "x2": b}
    assert F("x1 >= x2").holds(env) == (a >= b)
    assert F("x1 <= x2").holds(env) == (a <= b)
    assert F("x1 == x2").holds(env) == (a == b)
    assert F("x1 < x2").holds(env) == (a < b)


atoms = st.sampled_from(["x1 > 0", "x2 > 0", "x1 + x2 > 0", "x1 - x2 > 0", "3 - x1 > 0"])


@settings(max_examples=200, deadline=None)
@given(st.lists(atoms, min_size=1, max_size=5, unique=True), st.data(), small, small)
def test_partition_reconstructs_formula(parts, data, a, b):
    phi = F(" && ".join(parts))
    chosen = data.draw(st.lists(st.sampled_from(parts), min_size=1, unique=True))
    chi = clause_subset(phi, F(" && ".join(chosen)))
    env = {"x1": a, "x2": b}
    assert conj(chi, phi - chi) == phi
    assert conj(chi, phi - chi).holds(env) == phi.holds(env)
    assert conj(chi, phi).holds(env) == (chi.holds(env) and phi.holds(env))
