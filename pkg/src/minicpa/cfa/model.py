"""CFA data model: locations, edges, and the automaton container.

Locations are numbered in creation order, so identical sources produce
identical CFAs.  Variables are qualified as ``function::name``; the return
value of a function ``f`` lives in ``f::__retval__``.

Location kinds:

======================  =====================================================
``normal``              ordinary program location
``entry`` / ``exit``    per-function entry and exit
``halt``                after a no-return call such as ``__assert_fail``
``trap``                division-by-zero guard sink (halts, not an error)
``overflow_error``      inserted by overflow instrumentation
``nonterm_error``       inserted by termination instrumentation
======================  =====================================================

Sink kinds (``exit`` of the entry function, ``halt``, ``trap`` and the two
error kinds) legitimately have no outgoing edges; every other location has at
least one.
"""

from __future__ import annotations

from minicpa.frontend import syntax

SINK_KINDS = {"halt", "trap", "overflow_error", "nonterm_error"}
ERROR_KINDS = {"overflow_error", "nonterm_error"}


class Location:
    __slots__ = ("id", "function", "line", "kind", "is_loop_head",
                 "out_edges", "in_edges")

    def __init__(self, loc_id: int, function: str, line: int,
                 kind: str = "normal"):
        self.id = loc_id
        self.function = function
        self.line = line
        self.kind = kind
        self.is_loop_head = False
        self.out_edges: list[Edge] = []
        self.in_edges: list[Edge] = []

    @property
    def is_error(self) -> bool:
        return self.kind in ERROR_KINDS

    def __repr__(self):
        head = " loophead" if self.is_loop_head else ""
        return f"<N{self.id} {self.function} line {self.line} {self.kind}{head}>"


class Edge:
    """Base class for CFA edges.

    ``synthetic`` marks edges the builder or an instrumentation pass invented
    (guards, shadow updates, structural no-ops); test-goal enumeration and
    witness matching only consider non-synthetic edges.
    """

    __slots__ = ("src", "dst", "pos", "synthetic", "edge_id")

    def __init__(self, src: Location, dst: Location, pos, synthetic: bool):
        self.src = src
        self.dst = dst
        self.pos = pos
        self.synthetic = synthetic
        self.edge_id = -1  # assigned by Cfa.renumber

    @property
    def line(self) -> int:
        return self.pos.line if self.pos is not None else self.src.line

    def describe(self) -> str:
        raise NotImplementedError

    def __repr__(self):
        return f"<E{self.edge_id} N{self.src.id}->N{self.dst.id} {self.describe()}>"


class DeclEdge(Edge):
    __slots__ = ("var", "ctype", "init")

    def __init__(self, src, dst, pos, var: str, ctype: str,
                 init: syntax.Expr | None, synthetic=False):
        super().__init__(src, dst, pos, synthetic)
        self.var = var
        self.ctype = ctype
        self.init = init

    def describe(self):
        init = f" = {syntax.expr_source(self.init)}" if self.init else ""
        return f"{syntax.type_source(self.ctype)} {_unq(self.var)}{init};"


class AssignEdge(Edge):
    __slots__ = ("var", "ctype", "rhs")

    def __init__(self, src, dst, pos, var: str, ctype: str, rhs: syntax.Expr,
                 synthetic=False):
        super().__init__(src, dst, pos, synthetic)
        self.var = var
        self.ctype = ctype
        self.rhs = rhs

    def describe(self):
        return f"{_unq(self.var)} = {syntax.expr_source(self.rhs)};"


class AssumeEdge(Edge):
    __slots__ = ("cond", "truth")

    def __init__(self, src, dst, pos, cond: syntax.Expr, truth: bool,
                 synthetic=False):
        super().__init__(src, dst, pos, synthetic)
        self.cond = cond
        self.truth = truth

    def describe(self):
        text = syntax.expr_source(self.cond)
        return f"[{text}]" if self.truth else f"[!({text})]"


class NondetEdge(Edge):
    __slots__ = ("var", "ctype", "callee")

    def __init__(self, src, dst, pos, var: str, ctype: str, callee: str,
                 synthetic=False):
        super().__init__(src, dst, pos, synthetic)
        self.var = var
        self.ctype = ctype
        self.callee = callee

    def describe(self):
        return f"{_unq(self.var)} = {self.callee}();"


class CallEdge(Edge):
    """Call to a defined function; dst is the callee's entry location."""

    __slots__ = ("callee", "args", "param_vars", "param_types", "return_site",
                 "call_id")

    def __init__(self, src, dst, pos, callee: str, args: list,
                 param_vars: list, param_types: list, return_site: Location,
                 call_id: int):
        super().__init__(src, dst, pos, synthetic=False)
        self.callee = callee
        self.args = args
        self.param_vars = param_vars
        self.param_types = param_types
        self.return_site = return_site
        self.call_id = call_id

    def describe(self):
        args = ", ".join(syntax.expr_source(a) for a in self.args)
        return f"{self.callee}({args})"


class FunctionReturnEdge(Edge):
    """Callee exit back to the call site; taken only when the callstack's
    top frame matches ``call_id``."""

    __slots__ = ("callee", "call_id", "assign")

    def __init__(self, src, dst, pos, callee: str, call_id: int,
                 assign: tuple[str, str, syntax.Expr] | None):
        super().__init__(src, dst, pos, synthetic=True)
        self.callee = callee
        self.call_id = call_id
        self.assign = assign  # (lhs var, lhs type, expr over callee retval)

    def describe(self):
        if self.assign:
            return f"{_unq(self.assign[0])} = {self.callee}(...) returned"
        return f"{self.callee}(...) returned"


class ExternalCallEdge(Edge):
    """Call to a no-return external such as __assert_fail; dst is a halt
    sink."""

    __slots__ = ("callee",)

    def __init__(self, src, dst, pos, callee: str):
        super().__init__(src, dst, pos, synthetic=False)
        self.callee = callee

    def describe(self):
        return f"{self.callee}();"


class ReturnEdge(Edge):
    """A ``return`` statement; dst is the function exit."""

    __slots__ = ("expr", "retval_var", "ctype")

    def __init__(self, src, dst, pos, expr: syntax.Expr | None,
                 retval_var: str, ctype: str):
        super().__init__(src, dst, pos, synthetic=False)
        self.expr = expr
        self.retval_var = retval_var
        self.ctype = ctype

    def describe(self):
        if self.expr is None:
            return "return;"
        return f"return {syntax.expr_source(self.expr)};"


class LabelEdge(Edge):
    __slots__ = ("name",)

    def __init__(self, src, dst, pos, name: str):
        super().__init__(src, dst, pos, synthetic=False)
        self.name = name

    def describe(self):
        return f"{self.name}:"


class NoopEdge(Edge):
    __slots__ = ("note",)

    def __init__(self, src, dst, pos, note: str = "", synthetic=True):
        super().__init__(src, dst, pos, synthetic)
        self.note = note

    def describe(self):
        return f"noop {self.note}".rstrip()


def _unq(qualified: str) -> str:
    return qualified.split("::", 1)[1] if "::" in qualified else qualified


def _local_successor(edge: Edge) -> Location | None:
    """Successor for function-local traversal.

    A call steps straight to its return site (recursion is rejected by the
    frontend, so calls never participate in cycles); the callee-side return
    edge has no local successor.
    """
    if isinstance(edge, CallEdge):
        return edge.return_site
    if isinstance(edge, FunctionReturnEdge):
        return None
    return edge.dst


class Cfa:
    def __init__(self, program, entry_function: str, source_path: str,
                 source_text: str):
        self.program = program
        self.entry_function = entry_function
        self.source_path = source_path
        self.source_text = source_text
        self.locations: list[Location] = []
        self.edges: list[Edge] = []
        self.function_entries: dict[str, Location] = {}
        self.function_exits: dict[str, Location] = {}
        self.var_types: dict[str, str] = {}  # qualified name -> int/uint

    # -- construction helpers (used by build and instrumentation) ---------

    def new_location(self, function: str, line: int, kind="normal") -> Location:
        loc = Location(len(self.locations), function, line, kind)
        self.locations.append(loc)
        return loc

    def add_edge(self, edge: Edge) -> Edge:
        self.edges.append(edge)
        edge.src.out_edges.append(edge)
        edge.dst.in_edges.append(edge)
        return edge

    def renumber(self):
        """Assign deterministic edge ids (creation order)."""
        for i, e in enumerate(self.edges):
            e.edge_id = i

    @property
    def entry(self) -> Location:
        return self.function_entries[self.entry_function]

    @property
    def loop_heads(self) -> list[Location]:
        return [l for l in self.locations if l.is_loop_head]

    def reachable_locations(self) -> set[Location]:
        seen = {self.entry}
        todo = [self.entry]
        while todo:
            loc = todo.pop()
            for e in loc.out_edges:
                if e.dst not in seen:
                    seen.add(e.dst)
                    todo.append(e.dst)
        return seen

    def mark_loop_heads(self):
        """Mark the target of every depth-first back edge as a loop head.

        For a ``while`` loop this is exactly the location where the condition
        is first evaluated; ``goto`` cycles get the first location of the
        cycle that the search enters.  Afterwards every cycle in the CFA
        contains at least one loop head — several passes rely on that
        (loop bounding, induction segmentation, termination shadows).
        """
        for loc in self.locations:
            loc.is_loop_head = False
        color: dict[int, int] = {}  # 1 = on stack, 2 = done
        for fn, entry in self.function_entries.items():
            if color.get(entry.id):
                continue
            stack: list[tuple[Location, int]] = [(entry, 0)]
            color[entry.id] = 1
            while stack:
                loc, idx = stack[-1]
                if idx < len(loc.out_edges):
                    stack[-1] = (loc, idx + 1)
                    edge = loc.out_edges[idx]
                    nxt = _local_successor(edge)
                    if nxt is None:
                        continue
                    c = color.get(nxt.id)
                    if c == 1:
                        nxt.is_loop_head = True
                    elif c is None:
                        color[nxt.id] = 1
                        stack.append((nxt, 0))
                else:
                    color[loc.id] = 2
                    stack.pop()

    def validate(self):
        """Check structural invariants; raises AssertionError on violation."""
        for loc in self.locations:
            if loc.kind in SINK_KINDS or loc.kind == "exit":
                continue
            assert loc.out_edges, f"{loc!r} has no outgoing edges"
            assumes = [e for e in loc.out_edges if isinstance(e, AssumeEdge)]
            if assumes:
                assert len(assumes) == 2 and len(loc.out_edges) == 2, \
                    f"{loc!r}: assume edges must form a complementary pair"
                a, b = assumes
                assert a.cond is b.cond and a.truth != b.truth, \
                    f"{loc!r}: assume pair must negate one condition"
            elif not any(isinstance(e, FunctionReturnEdge)
                         for e in loc.out_edges):
                assert len(loc.out_edges) == 1, \
                    f"{loc!r}: non-branching location with several edges"
        for e in self.edges:
            assert e in e.src.out_edges and e in e.dst.in_edges
        # every cycle must contain a loop head (checked by acyclicity of the
        # per-function graph with edges into loop heads removed)
        state: dict[int, int] = {}
        for root in self.locations:
            if state.get(root.id):
                continue
            stack = [(root, 0)]
            state[root.id] = 1
            while stack:
                loc, idx = stack[-1]
                if idx < len(loc.out_edges):
                    stack[-1] = (loc, idx + 1)
                    edge = loc.out_edges[idx]
                    nxt = _local_successor(edge)
                    if nxt is None or nxt.is_loop_head:
                        continue
                    c = state.get(nxt.id)
                    assert c != 1, f"cycle without loop head at {nxt!r}"
                    if c is None:
                        state[nxt.id] = 1
                        stack.append((nxt, 0))
                else:
                    state[loc.id] = 2
                    stack.pop()
