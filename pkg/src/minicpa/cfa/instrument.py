"""CFA instrumentation passes.

`instrument_overflow` makes arithmetic overflow observable as reachability:
before every edge whose expressions contain checkable operations it inserts
assume pairs on OverflowCheck conditions, with the true branch leading to a
per-function OVERFLOW_ERROR location.  Checked are the signed operations
``+ - * neg`` and division/remainder (INT_MIN / -1), and — only when
`check_unsigned` is set — unsigned ``+ - * neg`` (wraparound).  Shifts and
bitwise operations are never checked: unsigned wraparound of ``<<`` is
defined behavior, and the remaining shift corner cases are handled by the
evaluation semantics, not treated as overflow.

`instrument_termination` reduces termination to safety: for each loop head,
shadow copies of the variables live at the head plus a `saved` flag are
added.  On a visit with the flag clear, a nondeterministic choice may save
the current values; on any later visit, finding the saved values again
proves the existence of a non-terminating execution, made reachable as a
NONTERM_ERROR location.

Both passes mutate the CFA in place and return it.
"""

from __future__ import annotations

from functools import reduce

from minicpa.cfa.model import (
    AssignEdge, AssumeEdge, CallEdge, Cfa, DeclEdge, Edge, FunctionReturnEdge,
    Location, NondetEdge, ReturnEdge, _local_successor,
)
from minicpa.errors import NoLoops
from minicpa.frontend import syntax
from minicpa.frontend.syntax import (
    Binary, Cast, Expr, IntLit, OverflowCheck, Unary, VarRef,
)


def _split_location(cfa: Cfa, loc: Location) -> Location:
    """Insert a fresh location after *loc*, taking over all its out-edges.
    Everything between *loc* and the returned location is up to the caller."""
    cont = cfa.new_location(loc.function, loc.line)
    for e in loc.out_edges:
        e.src = cont
        cont.out_edges.append(e)
    loc.out_edges = []
    return cont


# --------------------------------------------------------------------------
# overflow


def _overflow_checks(e: Expr | None, check_unsigned: bool,
                     out: list[OverflowCheck]) -> None:
    """Collect checks for *e* in evaluation order (operands before their
    operation)."""
    if e is None or isinstance(e, (IntLit, VarRef)):
        return
    if isinstance(e, Cast):
        # conversions truncate modulo 2^32; never an overflow check
        _overflow_checks(e.operand, check_unsigned, out)
        return
    if isinstance(e, OverflowCheck):
        return  # already-instrumented condition
    if isinstance(e, Unary):
        _overflow_checks(e.operand, check_unsigned, out)
        if e.op == "-":
            signed = e.ctype == syntax.INT
            if signed or check_unsigned:
                out.append(OverflowCheck(e.pos, syntax.INT, "neg",
                                         e.operand, None, signed))
        return
    if isinstance(e, Binary):
        _overflow_checks(e.left, check_unsigned, out)
        _overflow_checks(e.right, check_unsigned, out)
        if e.op in ("+", "-", "*", "/", "%"):
            signed = e.ctype == syntax.INT
            if e.op in ("/", "%"):
                # only the signed quotient can overflow (INT_MIN / -1);
                # the remainder shares the condition
                if signed:
                    out.append(OverflowCheck(e.pos, syntax.INT, "/",
                                             e.left, e.right, True))
            elif signed or check_unsigned:
                out.append(OverflowCheck(e.pos, syntax.INT, e.op,
                                         e.left, e.right, signed))
        return
    raise AssertionError(f"unexpected expression on an edge: {e!r}")


def instrument_overflow(cfa: Cfa, check_unsigned: bool = False) -> Cfa:
    error_locs: dict[str, Location] = {}

    def error_loc(function: str, line: int) -> Location:
        if function not in error_locs:
            error_locs[function] = cfa.new_location(function, line,
                                                    kind="overflow_error")
        return error_locs[function]

    for loc in list(cfa.locations):
        if not loc.out_edges:
            continue
        checks: list[OverflowCheck] = []
        assumes = [e for e in loc.out_edges if isinstance(e, AssumeEdge)]
        if assumes:
            # the pair shares one condition, evaluated once per arrival;
            # synthetic pairs (zero-divisor guards) are included so that an
            # overflowing divisor expression is flagged before the guard
            # can divert the run
            _overflow_checks(assumes[0].cond, check_unsigned, checks)
        else:
            for e in loc.out_edges:
                if e.synthetic:
                    continue
                if isinstance(e, DeclEdge):
                    _overflow_checks(e.init, check_unsigned, checks)
                elif isinstance(e, AssignEdge):
                    _overflow_checks(e.rhs, check_unsigned, checks)
                elif isinstance(e, CallEdge):
                    for a in e.args:
                        _overflow_checks(a, check_unsigned, checks)
                elif isinstance(e, ReturnEdge):
                    _overflow_checks(e.expr, check_unsigned, checks)
        if not checks:
            continue
        cont = _split_location(cfa, loc)
        cur = loc
        for i, check in enumerate(checks):
            nxt = cont if i == len(checks) - 1 else \
                cfa.new_location(loc.function, loc.line)
            line = check.pos.line if check.pos else loc.line
            err = error_loc(loc.function, line)
            cfa.add_edge(AssumeEdge(cur, err, check.pos, check, True,
                                    synthetic=True))
            cfa.add_edge(AssumeEdge(cur, nxt, check.pos, check, False,
                                    synthetic=True))
            cur = nxt
    cfa.renumber()
    cfa.validate()
    return cfa


# --------------------------------------------------------------------------
# termination as safety


def _expr_vars(e: Expr | None, acc: set[str]) -> None:
    if e is None:
        return
    if isinstance(e, VarRef):
        acc.add(e.name)
    elif isinstance(e, (Unary, Cast)):
        _expr_vars(e.operand, acc)
    elif isinstance(e, Binary):
        _expr_vars(e.left, acc)
        _expr_vars(e.right, acc)
    elif isinstance(e, OverflowCheck):
        _expr_vars(e.left, acc)
        _expr_vars(e.right, acc)


def _use_def(edge: Edge, cfa: Cfa) -> tuple[set[str], set[str]]:
    use: set[str] = set()
    if isinstance(edge, DeclEdge):
        _expr_vars(edge.init, use)
        return use, {edge.var}
    if isinstance(edge, AssignEdge):
        _expr_vars(edge.rhs, use)
        return use, {edge.var}
    if isinstance(edge, AssumeEdge):
        _expr_vars(edge.cond, use)
        return use, set()
    if isinstance(edge, NondetEdge):
        return use, {edge.var}
    if isinstance(edge, CallEdge):
        # viewed as a super-edge to the return site: reads the arguments,
        # writes the call's assignment target (if any)
        for a in edge.args:
            _expr_vars(a, use)
        exit_loc = cfa.function_exits[edge.callee]
        ret = next(e for e in exit_loc.out_edges
                   if isinstance(e, FunctionReturnEdge)
                   and e.call_id == edge.call_id)
        return use, ({ret.assign[0]} if ret.assign else set())
    if isinstance(edge, ReturnEdge):
        _expr_vars(edge.expr, use)
        return use, {edge.retval_var}
    return use, set()


def _liveness(cfa: Cfa) -> dict[int, set[str]]:
    """May-liveness per location, function-local (calls are super-edges).

    Qualified names keep per-function variable sets disjoint, so one global
    fixpoint over all edges is equivalent to per-function analyses.
    """
    live: dict[int, set[str]] = {loc.id: set() for loc in cfa.locations}
    use_def = {}
    for edge in cfa.edges:
        if not isinstance(edge, FunctionReturnEdge):
            use_def[edge] = _use_def(edge, cfa)
    changed = True
    while changed:
        changed = False
        for edge, (use, defs) in use_def.items():
            succ = _local_successor(edge)
            flow = use | (live[succ.id] - defs)
            src_live = live[edge.src.id]
            if not flow <= src_live:
                src_live |= flow
                changed = True
    return live


def _uint_lit(value: int) -> IntLit:
    return IntLit(None, syntax.UINT, value, unsigned_suffix=True)


def _conjoin(parts: list[Expr]) -> Expr:
    if not parts:
        return IntLit(None, syntax.INT, 1)
    return reduce(lambda a, b: Binary(None, syntax.INT, "&&", a, b), parts)


def instrument_termination(cfa: Cfa) -> Cfa:
    heads = cfa.loop_heads
    if not heads:
        raise NoLoops("the program has no loops and trivially terminates")
    live = _liveness(cfa)
    for head in sorted(heads, key=lambda l: l.id):
        fn = head.function
        watched = sorted(v for v in live[head.id] if v.startswith(f"{fn}::"))
        saved = f"{fn}::__saved_{head.id}"
        choice = f"{fn}::__choice_{head.id}"
        cfa.var_types[saved] = syntax.UINT
        cfa.var_types[choice] = syntax.UINT
        shadows = {v: f"{fn}::__shadow_{head.id}_{v.split('::', 1)[1]}"
                   for v in watched}
        for v, sh in shadows.items():
            cfa.var_types[sh] = cfa.var_types[v]

        cont = _split_location(cfa, head)  # takes over the head's out-edges
        error = cfa.new_location(fn, head.line, kind="nonterm_error")

        def var(name: str) -> VarRef:
            return VarRef(None, cfa.var_types[name], name)

        # saved == 0: the state may be saved here; saved == 1: compare
        not_yet = cfa.new_location(fn, head.line)
        again = cfa.new_location(fn, head.line)
        flag_clear = Binary(None, syntax.INT, "==", var(saved), _uint_lit(0),
                            cmp_type=syntax.UINT)
        cfa.add_edge(AssumeEdge(head, not_yet, None, flag_clear, True,
                                synthetic=True))
        cfa.add_edge(AssumeEdge(head, again, None, flag_clear, False,
                                synthetic=True))

        # nondeterministically choose to save the current values
        chosen = cfa.new_location(fn, head.line)
        cfa.add_edge(NondetEdge(not_yet, chosen, None, choice, syntax.UINT,
                                "__VERIFIER_nondet_uint", synthetic=True))
        save_now = Binary(None, syntax.INT, "!=", var(choice), _uint_lit(0),
                          cmp_type=syntax.UINT)
        saving = cfa.new_location(fn, head.line)
        cfa.add_edge(AssumeEdge(chosen, saving, None, save_now, True,
                                synthetic=True))
        cfa.add_edge(AssumeEdge(chosen, cont, None, save_now, False,
                                synthetic=True))
        copies = [(saved, _uint_lit(1))] + \
                 [(shadows[v], var(v)) for v in watched]
        cur = saving
        for i, (target, rhs) in enumerate(copies):
            nxt = cont if i == len(copies) - 1 else \
                cfa.new_location(fn, head.line)
            cfa.add_edge(AssignEdge(cur, nxt, None, target,
                                    cfa.var_types[target], rhs,
                                    synthetic=True))
            cur = nxt

        # the saved state seen again ⇒ some execution never terminates
        recurrence = _conjoin([
            Binary(None, syntax.INT, "==", var(v), var(shadows[v]),
                   cmp_type=cfa.var_types[v])
            for v in watched])
        cfa.add_edge(AssumeEdge(again, error, None, recurrence, True,
                                synthetic=True))
        cfa.add_edge(AssumeEdge(again, cont, None, recurrence, False,
                                synthetic=True))

    # the flags start clear: initialize them right after function entry
    # (leaving them nondeterministic would make the error spuriously
    # reachable in path-formula encodings)
    for head in sorted(heads, key=lambda l: l.id):
        entry = cfa.function_entries[head.function]
        after = _split_location(cfa, entry)
        cfa.add_edge(AssignEdge(entry, after, None,
                                f"{head.function}::__saved_{head.id}",
                                syntax.UINT, _uint_lit(0), synthetic=True))
    cfa.renumber()
    cfa.validate()
    return cfa
