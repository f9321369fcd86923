"""Concrete reference interpreter over CFAs.

This is the testing oracle: deterministic small-step execution with
wraparound 32-bit arithmetic.  Nondet reads consume the supplied input
vector in order.  Without an explicit specification the interpreter flags
what the default specification would: calls to __assert_fail, labels named
ERROR (case-insensitively), and instrumented error locations.

Variables read before their declaration edge executed evaluate to 0 (the
fixed bit pattern a zero-filled frame would give); analyses treat such reads
as nondeterministic instead, which soundly over-approximates this oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from minicpa.cfa.eval import MASK, eval_expr, to_signed, truthy
from minicpa.cfa.model import (
    ERROR_KINDS, AssignEdge, AssumeEdge, CallEdge, Cfa, DeclEdge, Edge,
    ExternalCallEdge, FunctionReturnEdge, LabelEdge, Location, NondetEdge,
    NoopEdge, ReturnEdge,
)
from minicpa.errors import InputExhausted


@dataclass(frozen=True)
class ReachedTarget:
    location: Location
    trace: tuple[Edge, ...]
    message: str | None = None
    env: dict = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class Terminated:
    exit_code: int
    reason: str = "return"
    env: dict = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class StepLimitExceeded:
    steps: int = 0


@dataclass
class _Frame:
    call_id: int
    callee: str


def _default_target(edge: Edge) -> str | None:
    """Violation message under the implicit default specification."""
    if isinstance(edge, ExternalCallEdge) and edge.callee == "__assert_fail":
        return "assertion"
    if isinstance(edge, LabelEdge) and edge.name.casefold() == "error":
        return "error label"
    if edge.dst.kind in ERROR_KINDS:
        return edge.dst.kind
    return None


def concrete_execute(cfa: Cfa, inputs, step_limit: int = 10 ** 6, spec=None,
                     on_edge=None):
    """Run *cfa* on the given nondet input vector.

    Returns ReachedTarget, Terminated, or StepLimitExceeded; raises
    InputExhausted when a Nondet edge has no input left.  When *spec* (a
    SpecAutomaton) is given it alone decides what counts as a target.
    `on_edge(edge, env)` is called after each executed edge.
    """
    if spec is not None:
        from minicpa.specs import initial_state, spec_transfer
        spec_state = initial_state(spec)

    env: dict[str, int] = {}
    stack: list[_Frame] = []
    trace: list[Edge] = []
    loc = cfa.entry
    inputs = list(inputs)
    next_input = 0
    steps = 0

    def lookup(name: str) -> int:
        return env.get(name, 0)

    while True:
        if loc.kind == "exit" and not stack:
            code = to_signed(env.get(f"{cfa.entry_function}::__retval__", 0))
            return Terminated(code, "return", env=dict(env))
        if loc.kind == "halt":
            return Terminated(1, "halt", env=dict(env))
        if loc.kind == "trap":
            return Terminated(1, "trap", env=dict(env))
        if loc.kind in ERROR_KINDS:
            # Only reachable here when the active specification does not
            # observe this kind; the run just stops.
            return Terminated(1, loc.kind, env=dict(env))

        if steps >= step_limit:
            return StepLimitExceeded(steps)
        steps += 1

        out = loc.out_edges
        if not out:
            raise AssertionError(f"stuck at location {loc.id} ({loc.kind})")
        if loc.kind == "exit":
            frame = stack[-1]
            edge = next(e for e in out
                        if isinstance(e, FunctionReturnEdge)
                        and e.call_id == frame.call_id)
        elif len(out) == 1:
            edge = out[0]
        else:
            assert all(isinstance(e, AssumeEdge) for e in out)
            value = truthy(eval_expr(out[0].cond, lookup))
            edge = next(e for e in out if e.truth == value)

        # execute
        if isinstance(edge, DeclEdge):
            env[edge.var] = eval_expr(edge.init, lookup) if edge.init is not None else 0
        elif isinstance(edge, AssignEdge):
            env[edge.var] = eval_expr(edge.rhs, lookup)
        elif isinstance(edge, NondetEdge):
            if next_input >= len(inputs):
                raise InputExhausted(
                    f"nondet read #{next_input + 1} at line {edge.line} has "
                    f"no input value")
            env[edge.var] = inputs[next_input] & MASK
            next_input += 1
        elif isinstance(edge, CallEdge):
            values = [eval_expr(a, lookup) for a in edge.args]
            stack.append(_Frame(edge.call_id, edge.callee))
            for var, value in zip(edge.param_vars, values):
                env[var] = value
        elif isinstance(edge, FunctionReturnEdge):
            stack.pop()
            if edge.assign is not None:
                lhs, _ctype, expr = edge.assign
                env[lhs] = eval_expr(expr, lookup)
        elif isinstance(edge, ReturnEdge):
            if edge.expr is not None:
                env[edge.retval_var] = eval_expr(edge.expr, lookup)
        elif isinstance(edge, (AssumeEdge, LabelEdge, NoopEdge, ExternalCallEdge)):
            pass
        else:
            raise AssertionError(f"unknown edge kind {type(edge).__name__}")

        trace.append(edge)
        if on_edge is not None:
            on_edge(edge, env)

        if spec is not None:
            spec_state = spec_transfer(spec, spec_state, edge)
            if spec_state.is_error:
                return ReachedTarget(edge.dst, tuple(trace),
                                     spec_state.message, env=dict(env))
        else:
            message = _default_target(edge)
            if message is not None:
                return ReachedTarget(edge.dst, tuple(trace), message,
                                     env=dict(env))

        loc = edge.dst
