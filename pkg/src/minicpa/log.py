"""Run log with the `message (Source.method, LEVEL)` console format.

Analyses report progress through a process-wide `Log` so that library code
stays print-free: the CLI swaps in an echoing log for the duration of a run,
tests capture lines in memory.  Runs are single-threaded; the global is a
deliberate simplification.
"""

from __future__ import annotations

import sys
from contextlib import contextmanager


class Log:
    def __init__(self, echo: bool = False, stream=None):
        self.echo = echo
        self.stream = stream
        self.lines: list[str] = []

    def __call__(self, message: str, source: str, level: str = "INFO") -> None:
        line = f"{message} ({source}, {level})"
        self.lines.append(line)
        if self.echo:
            print(line, file=self.stream or sys.stdout)


current = Log()


def emit(message: str, source: str, level: str = "INFO") -> None:
    current(message, source, level)


@contextmanager
def use(log: Log):
    """Temporarily install *log* as the process-wide run log."""
    global current
    previous, current = current, log
    try:
        yield log
    finally:
        current = previous


def capture(echo: bool = False, stream=None):
    """`with log.capture() as lines:` collects emitted lines."""
    return use(Log(echo=echo, stream=stream))
