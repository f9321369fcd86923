"""CPA components and their composition.

Every analysis is a `Cpa`: an abstract domain plus transfer/merge/stop
behavior and an optional dynamic precision adjustment.  A verification run
always uses a `CompositeCpa` whose first three components track the control
location, the call stack, and the specification automaton; domain components
follow.
"""

from __future__ import annotations

import itertools

from minicpa.cfa.model import CallEdge, Cfa, Edge, FunctionReturnEdge
from minicpa.specs import SpecAutomaton, initial_state, spec_transfer

CONTINUE = "continue"
BREAK = "break"


class Cpa:
    """Base component: merge-sep, stop-sep by equality, never a target."""

    name = "cpa"
    #: partition-relevant components must agree between states before the
    #: engine considers merging or coverage
    partitions = False

    def initial_state(self, cfa: Cfa):
        raise NotImplementedError

    def initial_precision(self, cfa: Cfa):
        return None

    def transfer(self, state, edge: Edge, precision):
        raise NotImplementedError

    def merge(self, new, existing, precision):
        return existing  # merge-sep

    def covers(self, state, other) -> bool:
        return state == other

    def stop(self, state, candidates, precision) -> bool:
        return any(self.covers(state, c) for c in candidates)

    def is_target(self, state) -> bool:
        return False

    def target_info(self, state):
        return None

    def prec_adjust(self, state, precision, exploration):
        return state, precision, CONTINUE

    def describe(self, state) -> str:
        return str(state)


class LocationCpa(Cpa):
    name = "location"
    partitions = True

    def initial_state(self, cfa: Cfa):
        return cfa.entry

    def transfer(self, state, edge, precision):
        return [edge.dst] if edge.src is state else []

    def describe(self, state) -> str:
        return f"N{state.id}"


class CallstackCpa(Cpa):
    """Tracks the stack of open call sites as a tuple of call ids."""

    name = "callstack"
    partitions = True

    def initial_state(self, cfa: Cfa):
        return ()

    def transfer(self, state, edge, precision):
        if isinstance(edge, CallEdge):
            return [state + (edge.call_id,)]
        if isinstance(edge, FunctionReturnEdge):
            if state and state[-1] == edge.call_id:
                return [state[:-1]]
            return []
        return [state]

    def describe(self, state) -> str:
        return f"stack{list(state)}"


class SpecCpa(Cpa):
    """Observer running the specification automaton alongside the analysis."""

    name = "spec"
    partitions = True

    def __init__(self, automaton: SpecAutomaton):
        self.automaton = automaton

    def initial_state(self, cfa: Cfa):
        return initial_state(self.automaton)

    def transfer(self, state, edge, precision):
        return [spec_transfer(self.automaton, state, edge)]

    def is_target(self, state) -> bool:
        return state.is_error

    def target_info(self, state):
        return state.message if state.is_error else None

    def describe(self, state) -> str:
        return state.current


class CompositeState(tuple):
    """Fixed-order product state; index 0 is always the CFA location."""

    __slots__ = ()

    @property
    def location(self):
        return self[0]

    @property
    def callstack(self):
        return self[1]


class CompositeCpa(Cpa):
    """Product of components with component-wise operators.

    `stop_enabled=False` turns the reached set into a pure path tree, which
    bounded model checking uses to keep one formula per syntactic path.
    """

    name = "composite"

    def __init__(self, components, stop_enabled: bool = True):
        self.components = list(components)
        assert self.components and self.components[0].name == "location"
        assert len(self.components) > 1 and self.components[1].name == "callstack"
        self.stop_enabled = stop_enabled
        self._partition_indices = tuple(
            i for i, c in enumerate(self.components) if c.partitions)

    def component_index(self, name: str) -> int:
        for i, c in enumerate(self.components):
            if c.name == name:
                return i
        raise KeyError(name)

    def initial_state(self, cfa: Cfa):
        return CompositeState(c.initial_state(cfa) for c in self.components)

    def initial_precision(self, cfa: Cfa):
        return tuple(c.initial_precision(cfa) for c in self.components)

    def transfer(self, state, edge, precision):
        parts = []
        for c, s, p in zip(self.components, state, precision):
            succ = c.transfer(s, edge, p)
            if not succ:
                return []
            parts.append(succ)
        return [CompositeState(combo) for combo in itertools.product(*parts)]

    def partition_key(self, state):
        loc = state[0]
        rest = tuple(state[i] for i in self._partition_indices[1:])
        return (loc.id,) + rest

    def merge(self, new, existing, precision):
        merged = tuple(c.merge(n, e, p) for c, n, e, p
                       in zip(self.components, new, existing, precision))
        if all(m == e for m, e in zip(merged, existing)):
            return existing
        return CompositeState(merged)

    def covers(self, state, other) -> bool:
        return all(c.covers(s, o)
                   for c, s, o in zip(self.components, state, other))

    def stop(self, state, candidates, precision) -> bool:
        if not self.stop_enabled:
            return False
        return any(self.covers(state, c) for c in candidates)

    def coverer_of(self, state, candidates):
        for cand in candidates:
            if self.covers(state, cand.state):
                return cand
        return None

    def is_target(self, state) -> bool:
        return any(c.is_target(s)
                   for c, s in zip(self.components, state))

    def target_info(self, state):
        for c, s in zip(self.components, state):
            info = c.target_info(s)
            if info is not None:
                return info
        return None

    def prec_adjust(self, state, precision, exploration):
        parts = []
        precs = []
        signal = CONTINUE
        for c, s, p in zip(self.components, state, precision):
            s2, p2, sig = c.prec_adjust(s, p, exploration)
            parts.append(s2)
            precs.append(p2)
            if sig == BREAK:
                signal = BREAK
        adjusted = CompositeState(parts)
        if self.is_target(adjusted):
            signal = BREAK
        return adjusted, tuple(precs), signal

    def describe(self, state) -> str:
        return " | ".join(c.describe(s)
                          for c, s in zip(self.components, state))
