"""Counterexample-guided refinement driver and the common verdict type."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from minicpa.cfa.model import Cfa
from minicpa.engine.algorithm import (
    Exhausted, Exploration, Limits, LimitHit, TargetReached,
)
from minicpa.engine.arg import Arg, ErrorPath
from minicpa.engine.core import CompositeCpa
from minicpa.errors import RefinementStall


@dataclass
class Feasible:
    """The error path executes concretely; `inputs` replay it."""

    inputs: list
    path: ErrorPath


@dataclass
class PrecisionIncrement:
    """The error path was spurious; rerun with this composite precision."""

    precision: tuple


@dataclass
class Pruned:
    """The error path was spurious and removed in place; exploration resumes.

    `taints_proof` marks prunes that may have discarded real paths (states
    merged from several branches): an exhausted exploration then reports
    UNKNOWN instead of TRUE.
    """

    taints_proof: bool = False


@dataclass
class Unconfirmed:
    """The refiner could not decide the path (solver gave up): verdict is
    UNKNOWN — never FALSE on an unconfirmed counterexample."""

    reason: str


@dataclass
class Verdict:
    status: str  # "TRUE" | "FALSE" | "UNKNOWN"
    reason: str | None = None
    counterexample: Feasible | None = None
    arg: Arg | None = None
    stats: dict = field(default_factory=dict)

    @property
    def is_true(self):
        return self.status == "TRUE"

    @property
    def is_false(self):
        return self.status == "FALSE"


def cegar_loop(composite: CompositeCpa, refiner, cfa: Cfa,
               limits: Limits | None = None, order: str = "bfs",
               precision=None) -> Verdict:
    """Alternate exploration and refinement until a verdict.

    `refiner(path, precision)` must return `Feasible` only when the path
    concretely reaches the target; `Pruned` drops the refuted target and
    resumes the same exploration; `PrecisionIncrement` recomputes the
    reachability graph from the root under the refined precision.  The
    time budget spans the whole loop, restarts included.
    """
    if precision is None:
        precision = composite.initial_precision(cfa)
    limits = limits or Limits()
    deadline = (time.monotonic() + limits.max_seconds
                if limits.max_seconds is not None else None)

    def current_limits() -> Limits:
        if deadline is None:
            return limits
        return Limits(limits.max_states,
                      max(0.0, deadline - time.monotonic()))

    previous: tuple | None = None
    refinements = 0
    pruned = 0
    tainted = False
    exploration = Exploration(composite, cfa, current_limits(), precision,
                              order)
    while True:
        result = exploration.run()
        stats = {"refinements": refinements, "pruned": pruned,
                 "reached": exploration.reached_size()}
        if isinstance(result, Exhausted):
            if result.truncated or tainted:
                return Verdict("UNKNOWN", reason="analysis incomplete",
                               arg=result.arg, stats=stats)
            return Verdict("TRUE", arg=result.arg, stats=stats)
        if isinstance(result, LimitHit):
            return Verdict("UNKNOWN", reason=result.reason, arg=result.arg,
                           stats=stats)
        assert isinstance(result, TargetReached)
        try:
            outcome = refiner(result.path, precision)
        except RefinementStall as stall:
            return Verdict("UNKNOWN", reason=str(stall), arg=result.arg,
                           stats=stats)
        if isinstance(outcome, Feasible):
            info = composite.target_info(result.path.target.state)
            return Verdict("FALSE", reason=info, counterexample=outcome,
                           arg=result.arg, stats=stats)
        if isinstance(outcome, Unconfirmed):
            return Verdict("UNKNOWN", reason=outcome.reason, arg=result.arg,
                           stats=stats)
        if isinstance(outcome, Pruned):
            exploration.prune_target(result.node)
            tainted = tainted or outcome.taints_proof
            pruned += 1
            continue
        attempt = (result.path.signature(), outcome.precision)
        if attempt == previous:
            return Verdict("UNKNOWN",
                           reason="refinement made no progress",
                           arg=result.arg, stats=stats)
        previous = attempt
        precision = outcome.precision
        refinements += 1
        exploration = Exploration(composite, cfa, current_limits(),
                                  precision, order)
