"""The reached-set/waitlist fixpoint algorithm over a composite CPA."""

from __future__ import annotations

import time
from collections import defaultdict, deque
from dataclasses import dataclass, field

from minicpa.cfa.model import Cfa
from minicpa.engine.arg import Arg, ArgNode, ErrorPath, extract_error_path
from minicpa.engine.core import BREAK, CompositeCpa


@dataclass
class Limits:
    """Resource caps for one exploration; `None` means unlimited."""

    max_states: int | None = None
    max_seconds: float | None = None


@dataclass
class TargetReached:
    arg: Arg
    path: ErrorPath

    @property
    def node(self) -> ArgNode:
        return self.path.target


@dataclass
class Exhausted:
    arg: Arg
    #: true when some states were cut off by a precision-adjustment break
    #: (e.g. the loop bound) rather than by coverage
    truncated: bool = False


@dataclass
class LimitHit:
    arg: Arg
    reason: str = ""


class Exploration:
    """Resumable state of one `cpa_algorithm` run.

    Callers that veto a reported target (counterexample checks) can prune
    the target node and call `run()` again to continue where they stopped.
    """

    def __init__(self, composite: CompositeCpa, cfa: Cfa,
                 limits: Limits | None = None, precision=None,
                 order: str = "bfs"):
        assert order in ("bfs", "dfs")
        self.composite = composite
        self.cfa = cfa
        self.limits = limits or Limits()
        self.precision = (precision if precision is not None
                          else composite.initial_precision(cfa))
        self.order = order
        self.arg = Arg()
        self.reached: dict = defaultdict(list)
        self.waitlist: deque[ArgNode] = deque()
        self.truncated_nodes: list[ArgNode] = []
        self.popped = 0
        self.started = time.monotonic()
        root = self.arg.make_root(composite.initial_state(cfa))
        self._add(root)

    # -- bookkeeping -----------------------------------------------------

    def _key(self, state):
        return self.composite.partition_key(state)

    def _add(self, node: ArgNode) -> None:
        self.reached[self._key(node.state)].append(node)
        self.waitlist.append(node)

    def _remove_from_reached(self, node: ArgNode) -> None:
        bucket = self.reached.get(self._key(node.state))
        if bucket and node in bucket:
            bucket.remove(node)

    def reached_size(self) -> int:
        return self.arg.non_covered_count()

    def _reenqueue(self, nodes) -> None:
        for node in nodes:
            if node.alive and not node.is_covered:
                self.reached[self._key(node.state)].append(node)
                self.waitlist.append(node)

    # -- target veto -------------------------------------------------------

    def prune_target(self, node: ArgNode) -> None:
        """Drop a refuted target state and resurrect anything it covered.

        Note that with coverage enabled, paths sharing a suffix with the
        refuted one stay collapsed; path-sensitive flavors that rely on
        pruning must run with `stop_enabled=False`.
        """
        removed, orphaned = self.arg.remove_subtree(node)
        for gone in removed:
            self._remove_from_reached(gone)
        self._reenqueue(orphaned)

    # -- merge handling ------------------------------------------------------

    def _merge_into(self, existing: ArgNode, parent: ArgNode, edge,
                    merged_state) -> None:
        node = self.arg.add_child(parent, edge, merged_state)
        for p, e in list(existing.parents):
            self.arg.link(p, e, node)
        self.arg.retarget_coverage(existing, node)
        removed, orphaned = self.arg.remove_subtree(existing)
        for gone in removed:
            self._remove_from_reached(gone)
        self._reenqueue(orphaned)
        self._add(node)

    # -- main loop -------------------------------------------------------

    def _pop(self) -> ArgNode:
        if self.order == "bfs":
            return self.waitlist.popleft()
        return self.waitlist.pop()

    def run(self):
        composite = self.composite
        limits = self.limits
        while self.waitlist:
            if limits.max_states is not None \
                    and self.reached_size() > limits.max_states:
                return LimitHit(self.arg, "state limit")
            if limits.max_seconds is not None \
                    and time.monotonic() - self.started > limits.max_seconds:
                return LimitHit(self.arg, "time limit")
            node = self._pop()
            if not node.alive or node.is_covered:
                continue
            self.popped += 1
            state, self.precision, signal = composite.prec_adjust(
                node.state, self.precision, self)
            if state != node.state:
                self._remove_from_reached(node)
                node.state = state
                self.reached[self._key(state)].append(node)
            if signal == BREAK:
                if composite.is_target(state):
                    return TargetReached(
                        self.arg, extract_error_path(self.arg, node))
                self.truncated_nodes.append(node)
                continue
            for edge in state.location.out_edges:
                for succ in composite.transfer(state, edge, self.precision):
                    self._handle_successor(node, edge, succ)
        return Exhausted(self.arg, truncated=bool(self.truncated_nodes))

    def _handle_successor(self, parent: ArgNode, edge, succ) -> None:
        composite = self.composite
        bucket = self.reached[self._key(succ)]
        for existing in list(bucket):
            merged = composite.merge(succ, existing.state, self.precision)
            if merged is existing.state or merged == existing.state:
                continue
            # joining into an ancestor would orphan the current branch;
            # leave both states in the bucket and let coverage converge
            if self.arg.is_ancestor(existing, parent):
                continue
            self._merge_into(existing, parent, edge, merged)
        bucket = self.reached[self._key(succ)]
        coverer = None
        if composite.stop_enabled:
            coverer = composite.coverer_of(succ, bucket)
        child = self.arg.add_child(parent, edge, succ)
        if coverer is not None:
            self.arg.cover(child, coverer)
        else:
            self._add(child)


def cpa_algorithm(composite: CompositeCpa, cfa: Cfa,
                  limits: Limits | None = None, precision=None,
                  order: str = "bfs"):
    """Run the waitlist loop to a verdict-shaped result.

    Returns TargetReached (with a root-to-target path), Exhausted, or
    LimitHit; the ARG is attached to each.
    """
    return Exploration(composite, cfa, limits, precision, order).run()
