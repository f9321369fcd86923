"""Value analysis: tracks concrete per-variable assignments.

Three flavors share one domain.  The join flavor merges states at meet
points and gives up on proofs once a spurious error path appears (pruning a
merged state could discard real paths).  The path-sensitive flavor runs
without coverage, checks each error path with the solver, prunes refuted
ones, and keeps exploring — exact on loop-free programs.  The CEGAR flavor
starts tracking nothing and grows a per-location tracked-variable precision
from infeasible paths via greedy variable selection.
"""

from __future__ import annotations

from dataclasses import dataclass

from minicpa import log
from minicpa.cfa.eval import eval_expr, truthy
from minicpa.cfa.model import (
    AssignEdge, AssumeEdge, CallEdge, Cfa, DeclEdge, FunctionReturnEdge,
    Location, NondetEdge, ReturnEdge,
)
from minicpa.engine import (
    Feasible, Limits, PrecisionIncrement, Pruned, Unconfirmed, Verdict,
    assemble_composite, cegar_loop,
)
from minicpa.engine.arg import ErrorPath
from minicpa.engine.core import Cpa
from minicpa.errors import RefinementStall
from minicpa.frontend.syntax import free_variables
from minicpa.smt import ssa
from minicpa.smt import terms as T
from minicpa.smt.client import SolverClient, shared_client

_CEX_SOURCE = "CounterexampleCheckAlgorithm.checkCounterexample"


# ---------------------------------------------------------------------------
# Domain


@dataclass(frozen=True)
class ValueState:
    """Partial map qualified variable -> 32-bit pattern; absent = unknown."""

    assignments: tuple = ()

    @staticmethod
    def of(mapping) -> "ValueState":
        return ValueState(tuple(sorted(mapping.items())))

    def as_dict(self) -> dict:
        return dict(self.assignments)

    def __str__(self):
        inner = ", ".join(f"{v}={c}" for v, c in self.assignments)
        return "{" + inner + "}"


@dataclass(frozen=True)
class ValuePrecision:
    """Tracked variables, scoped per CFA location; refinements only grow it."""

    track_all: bool = False
    scoped: frozenset = frozenset()  # of (location id, qualified variable)

    def tracks(self, loc_id: int, var: str) -> bool:
        return self.track_all or (loc_id, var) in self.scoped

    def with_pairs(self, pairs) -> "ValuePrecision":
        return ValuePrecision(self.track_all, self.scoped | frozenset(pairs))

    def variables(self) -> frozenset:
        return frozenset(v for _, v in self.scoped)


TRACK_ALL = ValuePrecision(track_all=True)
TRACK_NOTHING = ValuePrecision()


def _put(env: dict, var: str, value: int | None) -> None:
    if value is None:
        env.pop(var, None)
    else:
        env[var] = value


def _restrict(env: dict, loc_id: int, prec: ValuePrecision) -> ValueState:
    return ValueState.of({v: c for v, c in env.items()
                          if prec.tracks(loc_id, v)})


def value_transfer(state: ValueState, edge, prec: ValuePrecision):
    env = state.as_dict()
    lookup = env.get

    if isinstance(edge, AssumeEdge):
        value = eval_expr(edge.cond, lookup)
        if value is not None and truthy(value) != edge.truth:
            return []
        return [_restrict(env, edge.dst.id, prec)]

    new = dict(env)
    if isinstance(edge, DeclEdge):
        _put(new, edge.var,
             eval_expr(edge.init, lookup) if edge.init is not None else None)
    elif isinstance(edge, AssignEdge):
        _put(new, edge.var, eval_expr(edge.rhs, lookup))
    elif isinstance(edge, CallEdge):
        for param, arg in zip(edge.param_vars, edge.args):
            _put(new, param, eval_expr(arg, lookup))
    elif isinstance(edge, FunctionReturnEdge):
        if edge.assign is not None:
            lhs, _ctype, expr = edge.assign
            _put(new, lhs, eval_expr(expr, lookup))
    elif isinstance(edge, ReturnEdge):
        _put(new, edge.retval_var,
             eval_expr(edge.expr, lookup) if edge.expr is not None else None)
    elif isinstance(edge, NondetEdge):
        new.pop(edge.var, None)
    return [_restrict(new, edge.dst.id, prec)]


def value_merge_join(s1: ValueState, s2: ValueState,
                     prec: ValuePrecision | None = None) -> ValueState:
    """Pointwise agreement; a disagreeing variable is dropped."""
    other = s2.as_dict()
    return ValueState.of({v: c for v, c in s1.assignments
                          if other.get(v) == c})


class ValueCpa(Cpa):
    name = "value"

    def __init__(self, join: bool = False,
                 precision: ValuePrecision = TRACK_ALL):
        self.join = join
        self.precision = precision

    def initial_state(self, cfa: Cfa) -> ValueState:
        return ValueState()

    def initial_precision(self, cfa: Cfa) -> ValuePrecision:
        return self.precision

    def transfer(self, state, edge, precision):
        return value_transfer(state, edge, precision)

    def merge(self, new, existing, precision):
        if not self.join:
            return existing
        merged = value_merge_join(new, existing, precision)
        return existing if merged == existing else merged

    def covers(self, state, other) -> bool:
        mine = state.as_dict()
        return all(mine.get(v) == c for v, c in other.assignments)

    def describe(self, state) -> str:
        return str(state)


def _wants_cegar(config) -> bool:
    return str(config.get("analysis.algorithm.CEGAR", "false")).lower() \
        == "true"


def make_cpa(config) -> ValueCpa:
    join = str(config.get("cpa.value.merge", "SEP")).upper() == "JOIN"
    return ValueCpa(join=join, precision=(TRACK_NOTHING if _wants_cegar(config)
                                          else TRACK_ALL))


# ---------------------------------------------------------------------------
# Counterexample check


@dataclass
class FeasiblePath:
    inputs: list  # nondet values in execution order
    model: dict


@dataclass
class InfeasiblePath:
    pivot_index: int  # length of the shortest unsatisfiable prefix
    pivot: Location


@dataclass
class UnconfirmedPath:
    reason: str


def feasibility_check(path: ErrorPath, client: SolverClient):
    """Decide an abstract error path with the solver.

    Sat yields the nondet inputs of a model (they replay concretely); unsat
    yields the first location where the path prefix becomes contradictory,
    found by binary search (unsatisfiability is monotone in prefix length).
    """
    formula, _, nondet_reads = ssa.path_formula(path.edges)
    result = client.check([formula],
                          model_vars=[T.var(n) for n in nondet_reads])
    if result.is_sat:
        model = result.model or {}
        return FeasiblePath([model[n] for n in nondet_reads], model)
    if result.is_unknown:
        return UnconfirmedPath("solver could not decide path feasibility")
    lo, hi = 1, len(path.edges)
    while lo < hi:
        mid = (lo + hi) // 2
        prefix, _, _ = ssa.path_formula(path.edges[:mid])
        if client.check([prefix]).is_unsat:
            hi = mid
        else:
            lo = mid + 1
    return InfeasiblePath(lo, path.nodes[lo].state.location)


# ---------------------------------------------------------------------------
# Precision refinement


def _constrained_vars(edge) -> list[str]:
    """Variables whose value the edge pins down (nondet writes pin nothing)."""
    if isinstance(edge, DeclEdge):
        return [edge.var] if edge.init is not None else []
    if isinstance(edge, AssignEdge):
        return [edge.var]
    if isinstance(edge, AssumeEdge):
        return sorted(free_variables(edge.cond))
    if isinstance(edge, CallEdge):
        return list(edge.param_vars)
    if isinstance(edge, FunctionReturnEdge):
        return [edge.assign[0]] if edge.assign else []
    if isinstance(edge, ReturnEdge):
        return [edge.retval_var] if edge.expr is not None else []
    return []


def havoc_path_formula(edges, havocked: frozenset) -> T.Term:
    """Path formula with every constraint on `havocked` variables dropped.

    Writes to havocked variables become unconstrained fresh symbols and
    assume edges mentioning one are skipped; reads elsewhere still refer to
    the (now free) symbols.
    """
    ssa_map: dict = {}
    parts = []
    for edge in edges:
        if isinstance(edge, AssumeEdge) \
                and free_variables(edge.cond) & havocked:
            continue
        if isinstance(edge, (DeclEdge, AssignEdge)) and edge.var in havocked:
            ssa.write(edge.var, ssa_map)
            continue
        if isinstance(edge, ReturnEdge) and edge.retval_var in havocked:
            ssa.write(edge.retval_var, ssa_map)
            continue
        if isinstance(edge, FunctionReturnEdge) and edge.assign \
                and edge.assign[0] in havocked:
            ssa.write(edge.assign[0], ssa_map)
            continue
        if isinstance(edge, CallEdge) \
                and any(p in havocked for p in edge.param_vars):
            pre = dict(ssa_map)
            for param, arg in zip(edge.param_vars, edge.args):
                target = ssa.write(param, ssa_map)
                if param not in havocked:
                    parts.append(T.eq(target, ssa.encode_expr(arg, pre)))
            continue
        term, ssa_map = ssa.encode_edge(edge, ssa_map)
        parts.append(term)
    return T.and_(*parts)


def refine_value_precision(path: ErrorPath, precision: ValuePrecision,
                           client: SolverClient) -> ValuePrecision:
    """Greedy variable selection over an infeasible path.

    Variables are tried in reverse first-use order; one is unnecessary when
    havocking it (together with everything already havocked) keeps the path
    infeasible.  Kept variables are tracked at every path location from
    their first constraint onward.
    """
    first_use: dict[str, int] = {}
    for i, edge in enumerate(path.edges):
        for var in _constrained_vars(edge):
            first_use.setdefault(var, i)
    havocked: set[str] = set()
    kept: list[str] = []
    for var in sorted(first_use, key=lambda v: (first_use[v], v),
                      reverse=True):
        trial = frozenset(havocked | {var})
        if client.check([havoc_path_formula(path.edges, trial)]).is_unsat:
            havocked.add(var)
        else:
            kept.append(var)
    if not kept:
        raise RefinementStall(
            "no tracked variable can exclude the infeasible path")
    pairs = set()
    for var in kept:
        for node in path.nodes[first_use[var] + 1:]:
            pairs.add((node.state.location.id, var))
    if precision.track_all or pairs <= precision.scoped:
        raise RefinementStall("precision already tracks the refuted path")
    return precision.with_pairs(pairs)


# ---------------------------------------------------------------------------
# Driver


def run_value_analysis(config, cfa: Cfa, spec,
                       limits: Limits | None = None) -> Verdict:
    """Run the configured value-analysis flavor to a verdict."""
    composite = assemble_composite(config, cfa, spec)
    value_index = composite.component_index("value")
    join = str(config.get("cpa.value.merge", "SEP")).upper() == "JOIN"
    use_cegar = _wants_cegar(config)
    order = str(config.get("analysis.traversal", "bfs")).lower()
    client = shared_client(config.get("solver.command"))

    def refiner(path, precision):
        log.emit("Error path found, starting counterexample check "
                 "with CPACHECKER.", _CEX_SOURCE)
        outcome = feasibility_check(path, client)
        if isinstance(outcome, FeasiblePath):
            log.emit("Error path found and confirmed by counterexample "
                     "check with CPACHECKER.", _CEX_SOURCE)
            return Feasible(outcome.inputs, path)
        if isinstance(outcome, UnconfirmedPath):
            return Unconfirmed(outcome.reason)
        log.emit("Error path found but identified as infeasible.",
                 _CEX_SOURCE)
        if use_cegar:
            refined = refine_value_precision(
                path, precision[value_index], client)
            updated = (precision[:value_index] + (refined,)
                       + precision[value_index + 1:])
            return PrecisionIncrement(updated)
        if join:
            log.emit("Infeasible counterexample found, but could not "
                     "remove it from the ARG. Therefore, we cannot "
                     "prove safety.",
                     "ExceptionHandlingAlgorithm."
                     "handleExceptionWithErrorPath", "WARNING")
            return Pruned(taints_proof=True)
        return Pruned()

    return cegar_loop(composite, refiner, cfa, limits, order)
