import shutil
from pathlib import Path

import pytest

from loopaccel.smt import SmtClient
from loopaccel.syntax import load_loop, parse_loop

CORPUS = Path(__file__).resolve().parents[1] / "src" / "loopaccel" / "corpus"

requires_z3 = pytest.mark.skipif(shutil.which("z3") is None, reason="z3 binary not on PATH")


@pytest.fixture(scope="session")
def smt():
    with SmtClient() as client:
        yield client


@pytest.fixture(scope="session")
def corpus_dir():
    return CORPUS


def corpus_loop(name):
    return load_loop(CORPUS / f"{name}.loop")


def loop(text):
    return parse_loop(text)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import REPORT
    except ImportError:
        return
    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in REPORT:
            terminalreporter.write_line(line)
