"""Client for an external SMT-LIB2 solver subprocess.

One persistent process serves many queries; every query is prefixed with
``(reset)`` so no state leaks between checks.  The default command runs the
bundled solver in-tree; any SMT-LIB2-compliant solver (z3, mathsat, ...)
can be substituted via the ``solver.command`` configuration key.
"""

from __future__ import annotations

import queue
import shlex
import subprocess
import sys
import threading
import time
from dataclasses import dataclass, field

from minicpa.errors import SolverFailure
from minicpa.smt import parse, render, sexpr, terms

SAT, UNSAT, UNKNOWN = "sat", "unsat", "unknown"


def default_command() -> list[str]:
    return [sys.executable, "-m", "minicpa.smt.solver.cli"]


@dataclass
class SmtResult:
    status: str
    model: dict[str, int] | None = None

    @property
    def is_sat(self) -> bool:
        return self.status == SAT

    @property
    def is_unsat(self) -> bool:
        return self.status == UNSAT

    @property
    def is_unknown(self) -> bool:
        return self.status == UNKNOWN


@dataclass
class SolverStats:
    queries: int = 0
    sat: int = 0
    unsat: int = 0
    unknown: int = 0
    total_time: float = 0.0

    def record(self, status: str, elapsed: float):
        self.queries += 1
        self.total_time += elapsed
        if status == SAT:
            self.sat += 1
        elif status == UNSAT:
            self.unsat += 1
        else:
            self.unknown += 1


class SolverClient:
    def __init__(self, command: list[str] | str | None = None,
                 timeout: float = 60.0):
        if command is None:
            command = default_command()
        elif isinstance(command, str):
            command = shlex.split(command)
        self.command = command
        self.timeout = timeout
        self.stats = SolverStats()
        self._proc: subprocess.Popen | None = None
        self._lines: queue.Queue | None = None

    # -- process management --------------------------------------------------

    def _start(self):
        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise SolverFailure(f"cannot start solver {self.command!r}: {exc}") from exc
        self._lines = queue.Queue()

        def pump(proc, q):
            for line in proc.stdout:
                q.put(line.rstrip("\n"))
            q.put(None)

        threading.Thread(target=pump, args=(self._proc, self._lines),
                         daemon=True).start()

    def _ensure(self):
        if self._proc is None or self._proc.poll() is not None:
            self._start()

    def close(self):
        if self._proc is not None:
            try:
                self._proc.stdin.write("(exit)\n")
                self._proc.stdin.flush()
            except (BrokenPipeError, OSError, ValueError):
                pass
            try:
                self._proc.wait(timeout=2)
            except subprocess.TimeoutExpired:
                self._proc.kill()
            self._proc = None

    def _kill(self):
        if self._proc is not None:
            self._proc.kill()
            self._proc = None

    def _send(self, text: str):
        try:
            self._proc.stdin.write(text)
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError, ValueError) as exc:
            self._kill()
            raise SolverFailure(f"solver process died: {exc}") from exc

    def _read_line(self, deadline: float) -> str:
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                self._kill()
                raise TimeoutError
            try:
                line = self._lines.get(timeout=min(remaining, 0.5))
            except queue.Empty:
                continue
            if line is None:
                self._kill()
                raise SolverFailure("solver closed its output stream")
            if line.strip():
                return line.strip()

    # -- queries ---------------------------------------------------------------

    def check(self, assertions, model_vars=None, timeout: float | None = None) -> SmtResult:
        """Check satisfiability of the conjunction of ``assertions``.

        ``model_vars``: variable terms whose values are wanted when sat
        (declared even if they do not occur in the assertions).
        """
        if isinstance(assertions, terms.Term):
            assertions = [assertions]
        soft = timeout if timeout is not None else self.timeout
        started = time.monotonic()
        self._ensure()
        script = render.render_check(list(assertions), extra_vars=model_vars or ())
        # inject the per-query timeout right after (reset)
        ms = max(1, int(soft * 1000))
        script = script.replace("(reset)\n", f"(reset)\n(set-option :timeout {ms})\n", 1)
        self._send(script)
        hard_deadline = time.monotonic() + soft * 1.5 + 5.0
        try:
            answer = self._read_line(hard_deadline)
        except TimeoutError:
            self.stats.record(UNKNOWN, time.monotonic() - started)
            return SmtResult(UNKNOWN)
        if answer not in (SAT, UNSAT, UNKNOWN):
            self._kill()
            raise SolverFailure(f"unexpected solver answer: {answer!r}")
        model = None
        if answer == SAT and model_vars:
            model = self._get_values(model_vars, hard_deadline)
        self.stats.record(answer, time.monotonic() - started)
        return SmtResult(answer, model)

    def _get_values(self, model_vars, deadline: float) -> dict[str, int]:
        names = [v.attr for v in model_vars]
        syms = " ".join(render.smt_symbol(n) for n in names)
        self._send(f"(get-value ({syms}))\n")
        try:
            line = self._read_line(deadline)
        except TimeoutError:
            raise SolverFailure("timeout while reading model")
        if line.startswith("(error"):
            raise SolverFailure(f"get-value failed: {line}")
        pairs = sexpr.parse_one(line)
        model: dict[str, int] = {}
        for entry in pairs:
            name, value = entry[0], entry[1]
            model[name] = parse.parse_value_token(value)
        return model

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


_shared: dict[tuple, SolverClient] = {}


def shared_client(command=None, timeout: float = 60.0) -> SolverClient:
    """Process-wide client cache; keeps one solver subprocess per command."""
    if command is None:
        command = default_command()
    elif isinstance(command, str):
        command = shlex.split(command)
    key = tuple(command)
    client = _shared.get(key)
    if client is None:
        client = SolverClient(command, timeout)
        _shared[key] = client
    client.timeout = timeout
    return client
