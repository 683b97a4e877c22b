import sys
from pathlib import Path

import pytest

from loopaccel import smt as smt_mod
from loopaccel.errors import ProtocolError, SolverSpawnError, UnboundVariable
from loopaccel.formula import Formula
from loopaccel.smt import SmtClient, SolverConfig, Status, check_valid, parse_model, render_query, verify_counterexample
from loopaccel.syntax import parse_formula

from conftest import requires_z3

F = parse_formula
FAKE = str(Path(__file__).with_name("fake_solver.py"))


def fake(mode, timeout_ms=1000):
    return SolverConfig((sys.executable, FAKE, mode), timeout_ms)


def test_golden_query_text():
    text = render_query(F("x1 > 0 && x2 > 0"), F("x1 - 1 > 0 && x2 + 1 > 0"))
    assert text == (
        "(push 1)\n"
        "(declare-const |x1| Int)\n"
        "(declare-const |x2| Int)\n"
        "(assert (and (> |x1| 0) (> |x2| 0)))\n"
        "(assert (not (and (> (+ (- 1) |x1|) 0) (> (+ 1 |x2|) 0))))\n"
        "(check-sat)\n"
    )
    # byte-stable for identical inputs
    assert text == render_query(F("x1 > 0 && x2 > 0"), F("x1 - 1 > 0 && x2 + 1 > 0"))


def test_golden_rational_and_trivial_query():
    text = render_query(Formula.true(), F("x/2 - 1 > 0"))
    assert text == "(push 1)\n(declare-const |x| Int)\n(assert (not (> (+ (- 2) |x|) 0)))\n(check-sat)\n"


@requires_z3
def test_non_dec_is_not_invariant(smt):
    v = smt.check_valid(F("x1 > 0 && x2 > 0"), F("x1 - 1 > 0 && x2 + 1 > 0"))
    assert v.status is Status.NOT_VALID
    assert v.model["x1"] == 1 and v.model["x2"] >= 0
    assert verify_counterexample({"x1": 1, "x2": 1}, F("x1 > 0 && x2 > 0"), F("x1 - 1 > 0 && x2 + 1 > 0"))


@requires_z3
def test_increment_is_invariant(smt):
    assert smt.check_valid(F("x > 0"), F("x + 1 > 0")).is_valid


@requires_z3
def test_trivially_false_conclusion():
    v = check_valid(Formula.true(), F("0 > 0"))
    assert v.status is Status.NOT_VALID


@requires_z3
def test_nonlinear_query(smt):
    assert smt.check_valid(F("x > 0"), F("x*x > 0")).is_valid
    v = smt.check_valid(F("x*y > 0"), F("x > 0"))
    assert v.status is Status.NOT_VALID
    assert verify_counterexample(v.model, F("x*y > 0"), F("x > 0"))


@requires_z3
def test_cache_hits(smt):
    before = smt.stats.cache_hits
    smt.check_valid(F("x > 0"), F("x + 2 > 0"))
    smt.check_valid(F("x > 0"), F("x + 2 > 0"))
    assert smt.stats.cache_hits == before + 1


def test_verify_counterexample():
    prem, concl = F("x > 0"), F("x + 1 > 0")
    # nothing falsifies a valid implication
    assert not any(verify_counterexample({"x": k}, prem, concl) for k in range(-5, 6))
    with pytest.raises(UnboundVariable):
        verify_counterexample({"x1": 1}, F("x1 > 0 && x2 > 0"), F("x1 > 0"))


def test_parse_model_formats():
    assert parse_model("(model (define-fun |x1| () Int (- 1)) (define-fun x2 () Int 7))") == {"x1": -1, "x2": 7}
    assert parse_model("((define-fun |x1'| () Int 0))") == {"x1'": 0}
    with pytest.raises(ProtocolError):
        parse_model("((define-fun x () Int 1)")


def test_spawn_error():
    with pytest.raises(SolverSpawnError):
        check_valid(F("x > 0"), F("x > 0"), SolverConfig(("/nonexistent/solver",)))


def test_solver_killed_mid_query():
    with SmtClient(fake("die")) as client:
        with pytest.raises(ProtocolError):
            client.check_valid(F("x > 0"), F("x + 1 > 0"))


def test_garbage_reply():
    with SmtClient(fake("garbage")) as client:
        with pytest.raises(ProtocolError):
            client.check_valid(F("x > 0"), F("x + 1 > 0"))


def test_error_while_reading_model():
    with SmtClient(fake("model-error")) as client:
        with pytest.raises(ProtocolError):
            client.check_valid(F("x > 0"), F("x + 1 > 0"))


def test_unknown_is_not_valid():
    with SmtClient(fake("unknown")) as client:
        v = client.check_valid(F("x > 0"), F("x + 1 > 0"))
    assert v.status is Status.UNKNOWN and not v.is_valid


def test_unverified_model_becomes_unknown():
    # x = 5 does not falsify x > 0 ==> x + 1 > 0
    with SmtClient(fake("bogus-model")) as client:
        v = client.check_valid(F("x > 0"), F("x + 1 > 0"))
    assert v.status is Status.UNKNOWN
    assert "re-check" in v.reason


def test_timeout_kills_and_restarts(monkeypatch):
    monkeypatch.setattr(smt_mod, "GRACE_MS", 50)
    with SmtClient(fake("hang", timeout_ms=100)) as client:
        v = client.check_valid(F("x > 0"), F("x + 1 > 0"))
        assert v.status is Status.UNKNOWN and v.reason == "timeout"
        assert client.process is None
        v = client.check_valid(F("x > 1"), F("x + 1 > 0"))
        assert v.status is Status.UNKNOWN


def test_process_is_reused():
    with SmtClient(fake("unsat")) as client:
        assert client.check_valid(F("x > 0"), F("x + 1 > 0")).is_valid
        pid = client.process.pid
        assert client.check_valid(F("x > 1"), F("x + 1 > 0")).is_valid
        assert client.process.pid == pid
    assert client.process is None


def test_config_validation(monkeypatch):
    with pytest.raises(ValueError):
        SolverConfig(timeout_ms=0)
    monkeypatch.setenv("ACCEL_SMT_CMD", "mysolver --flag")
    assert SolverConfig.from_env().command == ("mysolver", "--flag")
    assert SolverConfig("z3 -in -T:5").command == ("z3", "-in", "-T:5")
