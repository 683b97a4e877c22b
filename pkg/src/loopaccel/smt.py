"""Validity checks through an external SMT-LIB2 solver process.

One :class:`SmtClient` owns one solver process, started lazily and reused
for every query via ``(push 1)``/``(pop 1)``.  A query asks whether
``premise => conclusion`` is valid by checking ``premise && !conclusion``
for satisfiability over the integers.
"""

from __future__ import annotations

import enum
import logging
import os
import queue
import shlex
import subprocess
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .errors import ProtocolError, SolverSpawnError, UnboundVariable
from .formula import Formula

log = logging.getLogger(__name__)

DEFAULT_COMMAND = "z3 -in"
DEFAULT_TIMEOUT_MS = 1000
# extra wall-clock allowance before the client gives up on a reply
GRACE_MS = 2000


@dataclass(frozen=True)
class SolverConfig:
    command: tuple[str, ...] = tuple(shlex.split(DEFAULT_COMMAND))
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    logic: str = "QF_NIA"

    def __post_init__(self):
        if isinstance(self.command, str):
            object.__setattr__(self, "command", tuple(shlex.split(self.command)))
        if not self.command:
            raise ValueError("empty solver command")
        if self.timeout_ms <= 0:
            raise ValueError("timeout must be positive")

    @classmethod
    def from_env(cls, command: str | None = None, timeout_ms: int | None = None) -> SolverConfig:
        command = command or os.environ.get("ACCEL_SMT_CMD") or DEFAULT_COMMAND
        if timeout_ms is None:
            timeout_ms = int(os.environ.get("ACCEL_TIMEOUT_MS", DEFAULT_TIMEOUT_MS))
        return cls(tuple(shlex.split(command)), timeout_ms)


class Status(enum.Enum):
    VALID = "valid"
    NOT_VALID = "not-valid"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class Verdict:
    status: Status
    model: Mapping[str, int] | None = None
    reason: str = ""

    @property
    def is_valid(self) -> bool:
        return self.status is Status.VALID

    def __str__(self) -> str:
        if self.status is Status.NOT_VALID:
            cex = ", ".join(f"{k}={v}" for k, v in sorted(self.model.items()))
            return f"not valid ({cex})"
        if self.status is Status.UNKNOWN:
            return f"unknown ({self.reason})"
        return "valid"


VALID = Verdict(Status.VALID)


def query_variables(premise: Formula, conclusion: Formula) -> list[str]:
    return sorted(premise.variables() | conclusion.variables())


def render_query(premise: Formula, conclusion: Formula) -> str:
    """The SMT-LIB2 commands of one query, between ``push`` and ``check-sat``."""
    lines = ["(push 1)"]
    for v in query_variables(premise, conclusion):
        lines.append(f"(declare-const |{v}| Int)")
    if not premise.is_true():
        lines.append(f"(assert {premise.to_smt()})")
    lines.append(f"(assert (not {conclusion.to_smt()}))")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


def verify_counterexample(cex: Mapping[str, int], premise: Formula, conclusion: Formula) -> bool:
    """Exact re-check that ``cex`` satisfies the premise and falsifies the conclusion.

    Raises :class:`UnboundVariable` if ``cex`` misses a variable.
    """
    for v in query_variables(premise, conclusion):
        if v not in cex:
            raise UnboundVariable(v)
    return premise.holds(cex) and not conclusion.holds(cex)


# -- s-expressions --------------------------------------------------------


def _sexp_tokens(text: str):
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "()":
            yield ch
            i += 1
        elif ch == "|":
            j = text.index("|", i + 1)
            yield text[i + 1 : j]
            i = j + 1
        elif ch == '"':
            j = i + 1
            while True:
                j = text.index('"', j)
                if text[j + 1 : j + 2] == '"':
                    j += 2
                    continue
                break
            yield text[i : j + 1]
            i = j + 1
        else:
            j = i
            while j < len(text) and not text[j].isspace() and text[j] not in "()":
                j += 1
            yield text[i:j]
            i = j


def parse_sexp(text: str):
    stack: list[list] = [[]]
    for tok in _sexp_tokens(text):
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) == 1:
                raise ProtocolError(f"unbalanced solver output: {text!r}")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise ProtocolError(f"unbalanced solver output: {text!r}")
    return stack[0]


def _model_value(term) -> Fraction:
    if isinstance(term, str):
        return Fraction(term)
    if term and term[0] == "-" and len(term) == 2:
        return -_model_value(term[1])
    if term and term[0] == "/" and len(term) == 3:
        return _model_value(term[1]) / _model_value(term[2])
    raise ProtocolError(f"cannot read model value {term!r}")


def parse_model(text: str) -> dict[str, int]:
    parsed = parse_sexp(text)
    if len(parsed) != 1 or not isinstance(parsed[0], list):
        raise ProtocolError(f"unexpected model: {text!r}")
    body = parsed[0]
    if body and body[0] == "model":
        body = body[1:]
    model = {}
    for entry in body:
        if not (isinstance(entry, list) and len(entry) == 5 and entry[0] == "define-fun"):
            raise ProtocolError(f"unexpected model entry {entry!r}")
        _, name, args, sort, value = entry
        if args or sort != "Int":
            continue
        v = _model_value(value)
        if v.denominator != 1:
            raise ProtocolError(f"non-integer model value for {name}")
        model[name] = int(v)
    return model


# -- client ---------------------------------------------------------------


@dataclass
class QueryStats:
    queries: int = 0
    cache_hits: int = 0
    unknown: int = 0


class SmtClient:
    """Serialized client for one solver process.

    Usable as a context manager; :meth:`close` terminates the process.
    Query results are cached by query text for the lifetime of the client.
    """

    def __init__(self, config: SolverConfig | None = None):
        self.config = config or SolverConfig()
        self.process: subprocess.Popen | None = None
        self._lines: queue.Queue | None = None
        self._lock = threading.Lock()
        self._cache: dict[str, Verdict] = {}
        self.stats = QueryStats()

    # -- process management -------------------------------------------

    def _start(self) -> None:
        try:
            self.process = subprocess.Popen(
                list(self.config.command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise SolverSpawnError(f"cannot start {' '.join(self.config.command)}: {exc}") from exc
        lines: queue.Queue = queue.Queue()
        self._lines = lines
        threading.Thread(target=_pump, args=(self.process.stdout, lines), daemon=True).start()
        preamble = []
        if os.path.basename(self.config.command[0]).startswith("z3"):
            preamble.append(f"(set-option :timeout {self.config.timeout_ms})")
        preamble.append("(set-option :produce-models true)")
        preamble.append(f"(set-logic {self.config.logic})")
        self._send("\n".join(preamble) + "\n")

    def _send(self, text: str) -> None:
        try:
            self.process.stdin.write(text)
            self.process.stdin.flush()
        except (BrokenPipeError, OSError, ValueError) as exc:
            self._kill()
            raise ProtocolError(f"solver stopped accepting input: {exc}") from exc

    def _readline(self) -> str | None:
        """Next non-empty line, or None on deadline expiry."""
        deadline = (self.config.timeout_ms + GRACE_MS) / 1000
        while True:
            try:
                line = self._lines.get(timeout=deadline)
            except queue.Empty:
                return None
            if line is _EOF:
                self._kill()
                raise ProtocolError("solver process exited")
            line = line.strip()
            if line:
                return line

    def _read_sexp(self) -> str | None:
        first = self._readline()
        if first is None:
            return None
        parts = [first]
        depth = first.count("(") - first.count(")")
        while depth > 0:
            line = self._readline()
            if line is None:
                return None
            parts.append(line)
            depth += line.count("(") - line.count(")")
        return "\n".join(parts)

    def _kill(self) -> None:
        if self.process is not None:
            try:
                self.process.kill()
                self.process.wait(timeout=5)
            except (OSError, subprocess.TimeoutExpired):
                pass
        self.process = None
        self._lines = None

    def close(self) -> None:
        with self._lock:
            if self.process is not None and self.process.poll() is None:
                try:
                    self.process.stdin.write("(exit)\n")
                    self.process.stdin.flush()
                    self.process.wait(timeout=1)
                except (OSError, ValueError, subprocess.TimeoutExpired):
                    pass
            self._kill()

    def __enter__(self) -> SmtClient:
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- queries ------------------------------------------------------

    def check_valid(self, premise: Formula, conclusion: Formula) -> Verdict:
        text = render_query(premise, conclusion)
        with self._lock:
            cached = self._cache.get(text)
            if cached is not None:
                self.stats.cache_hits += 1
                return cached
            verdict = self._run(text, premise, conclusion)
            self.stats.queries += 1
            if verdict.status is Status.UNKNOWN:
                self.stats.unknown += 1
            self._cache[text] = verdict
            return verdict

    def _run(self, text: str, premise: Formula, conclusion: Formula) -> Verdict:
        if self.process is None or self.process.poll() is not None:
            if self.process is not None:
                self._kill()
                raise ProtocolError("solver process exited")
            self._start()
        self._send(text)
        answer = self._readline()
        if answer is None:
            log.debug("solver timed out; restarting on next query")
            self._kill()
            return Verdict(Status.UNKNOWN, reason="timeout")
        if answer == "unsat":
            self._send("(pop 1)\n")
            return VALID
        if answer == "unknown":
            self._send("(pop 1)\n")
            return Verdict(Status.UNKNOWN, reason="solver returned unknown")
        if answer != "sat":
            self._kill()
            raise ProtocolError(f"unexpected solver reply {answer!r}")
        self._send("(get-model)\n")
        raw = self._read_sexp()
        if raw is None:
            self._kill()
            return Verdict(Status.UNKNOWN, reason="timeout while reading model")
        if raw.startswith("(error"):
            self._kill()
            raise ProtocolError(f"solver error: {raw}")
        self._send("(pop 1)\n")
        model = parse_model(raw)
        for v in query_variables(premise, conclusion):
            model.setdefault(v, 0)
        if not verify_counterexample(model, premise, conclusion):
            return Verdict(Status.UNKNOWN, reason="solver model failed exact re-check")
        return Verdict(Status.NOT_VALID, model=model)


_EOF = object()


def _pump(stream, lines: queue.Queue) -> None:
    try:
        for line in stream:
            lines.put(line)
    except (OSError, ValueError):
        pass
    lines.put(_EOF)


def check_valid(premise: Formula, conclusion: Formula, config: SolverConfig | None = None) -> Verdict:
    """One-shot validity check with a fresh solver process."""
    with SmtClient(config) as client:
        return client.check_valid(premise, conclusion)
