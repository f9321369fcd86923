"""Lower a type-checked AST into a control-flow automaton.

Lowering decisions:

- ``&&`` / ``||`` become branching structure (assume-edge pairs).  In value
  position (right-hand sides, call arguments, return values) the Boolean
  subtree is evaluated into a fresh temporary first, so the CFA itself only
  ever contains simple assume conditions.
- Every division/modulo gets a guard pair in evaluation order: the zero
  divisor branches to a ``trap`` sink (execution stops, nothing is violated),
  the nonzero branch continues.  Analyses therefore never observe a division
  by zero.
- Calls to ``__VERIFIER_nondet_*`` become Nondet edges; calls to no-return
  externals (``__assert_fail`` and friends) lead to a ``halt`` sink; calls to
  defined functions get a Call edge to the callee entry and a return edge per
  call site back to the caller.
- A label compiles to a Label edge, and ``goto`` jumps to the point *before*
  that edge, so every arrival at the label traverses it (the ErrorLabel
  specification observes these edges).
"""

from __future__ import annotations

from minicpa.errors import VerifierError
from minicpa.frontend import syntax
from minicpa.frontend.syntax import (
    Assign, Binary, Call, Cast, Decl, Expr, ExprStmt, Goto, If, IntLit,
    LabelStmt, OverflowCheck, Return, Unary, VarRef, While,
)
from minicpa.frontend.typecheck import NONDET_CALLS, NORETURN
from minicpa.cfa.model import (
    AssignEdge, AssumeEdge, CallEdge, Cfa, DeclEdge, ExternalCallEdge,
    FunctionReturnEdge, LabelEdge, Location, NondetEdge, NoopEdge, ReturnEdge,
)


def _lit(value: int, ctype: str, pos) -> IntLit:
    return IntLit(pos, ctype, value, unsigned_suffix=(ctype == syntax.UINT))


def contains_shortcircuit(e: Expr) -> bool:
    if isinstance(e, Binary):
        if e.op in syntax.LOGIC_OPS:
            return True
        return contains_shortcircuit(e.left) or contains_shortcircuit(e.right)
    if isinstance(e, Unary):
        return contains_shortcircuit(e.operand)
    if isinstance(e, Cast):
        return contains_shortcircuit(e.operand)
    return False


def _divisions(e: Expr, out: list):
    """Collect (divisor, pos) of every / and % in evaluation (post-) order."""
    if isinstance(e, Binary):
        _divisions(e.left, out)
        _divisions(e.right, out)
        if e.op in ("/", "%"):
            out.append((e.right, e.pos))
    elif isinstance(e, Unary):
        _divisions(e.operand, out)
    elif isinstance(e, Cast):
        _divisions(e.operand, out)
    elif isinstance(e, OverflowCheck):
        _divisions(e.left, out)
        if e.right is not None:
            _divisions(e.right, out)


class _Builder:
    def __init__(self, cfa: Cfa, prog):
        self.cfa = cfa
        self.prog = prog
        self.call_counter = 0
        self.temp_counter = 0
        # per call-site return edges are added after all functions exist
        self.pending_calls: list[CallEdge] = []

    # -- per-function lowering ------------------------------------------

    def lower_function(self, fn):
        cfa = self.cfa
        self.fn = fn
        self.labels: dict[str, tuple[Location, Location]] = {}
        self.trap_loc: Location | None = None
        self.halt_loc: Location | None = None
        entry = cfa.function_entries[fn.name]
        exit_loc = cfa.function_exits[fn.name]
        self.exit_loc = exit_loc
        for p in fn.params:
            cfa.var_types[f"{fn.name}::{p.name}"] = p.ctype
        if fn.ret_type != syntax.VOID:
            cfa.var_types[f"{fn.name}::__retval__"] = fn.ret_type
        start = cfa.new_location(fn.name, fn.pos.line if fn.pos else 0)
        cfa.add_edge(NoopEdge(entry, start, fn.pos, "function start"))
        end = self.lower_stmts(fn.body, start)
        if end is not None:
            cfa.add_edge(NoopEdge(end, exit_loc, None, "falls through"))
        for name, (pre, _post) in self.labels.items():
            if not any(isinstance(e, LabelEdge) for e in pre.out_edges):
                raise VerifierError(
                    f"label '{name}' in '{fn.name}' is never defined")

    def qualify(self, name: str) -> str:
        return f"{self.fn.name}::{name}"

    def fresh_temp(self, ctype: str) -> str:
        self.temp_counter += 1
        var = f"{self.fn.name}::__t{self.temp_counter}"
        self.cfa.var_types[var] = ctype
        return var

    def trap(self) -> Location:
        if self.trap_loc is None:
            self.trap_loc = self.cfa.new_location(self.fn.name, 0, "trap")
        return self.trap_loc

    def halt(self) -> Location:
        if self.halt_loc is None:
            self.halt_loc = self.cfa.new_location(self.fn.name, 0, "halt")
        return self.halt_loc

    # -- expression plumbing ---------------------------------------------

    def qualify_expr(self, e: Expr) -> Expr:
        """Return a copy of *e* with VarRefs renamed to qualified form."""
        if isinstance(e, VarRef):
            return VarRef(e.pos, e.ctype, self.qualify(e.name))
        if isinstance(e, Unary):
            return Unary(e.pos, e.ctype, e.op, self.qualify_expr(e.operand))
        if isinstance(e, Cast):
            return Cast(e.pos, e.ctype, e.target, self.qualify_expr(e.operand))
        if isinstance(e, Binary):
            out = Binary(e.pos, e.ctype, e.op, self.qualify_expr(e.left),
                         self.qualify_expr(e.right))
            out.cmp_type = e.cmp_type
            return out
        if isinstance(e, IntLit):
            return e
        raise VerifierError(f"cannot lower expression {e!r}")

    def guards(self, e: Expr, cur: Location, line: int) -> Location:
        """Insert division-by-zero guard pairs for *e* (already qualified)."""
        divs: list = []
        _divisions(e, divs)
        for divisor, pos in divs:
            cond = Binary(pos, syntax.INT, "==", divisor,
                          _lit(0, divisor.ctype, pos))
            cond.cmp_type = divisor.ctype
            ok = self.cfa.new_location(self.fn.name, line)
            self.cfa.add_edge(AssumeEdge(cur, self.trap(), pos, cond, True,
                                         synthetic=True))
            self.cfa.add_edge(AssumeEdge(cur, ok, pos, cond, False,
                                         synthetic=True))
            cur = ok
        return cur

    def eval_value(self, e: Expr, cur: Location, line: int):
        """Lower *e* (unqualified AST) for use in value position.

        Returns (expr, location): a division-guarded, short-circuit-free
        qualified expression and the location after any inserted edges.
        """
        if contains_shortcircuit(e):
            e, cur = self.extract_boolean(e, cur, line)
        q = self.qualify_expr(e)
        cur = self.guards(q, cur, line)
        return q, cur

    def extract_boolean(self, e: Expr, cur: Location, line: int):
        """Replace maximal &&/|| subtrees of *e* by fresh 0/1 temporaries."""
        if isinstance(e, Binary) and e.op in syntax.LOGIC_OPS:
            temp = self.fresh_temp(syntax.INT)
            t_loc = self.cfa.new_location(self.fn.name, line)
            f_loc = self.cfa.new_location(self.fn.name, line)
            join = self.cfa.new_location(self.fn.name, line)
            self.lower_condition(e, cur, t_loc, f_loc, line)
            self.cfa.add_edge(AssignEdge(
                t_loc, join, e.pos, temp, syntax.INT, _lit(1, syntax.INT, e.pos),
                synthetic=True))
            self.cfa.add_edge(AssignEdge(
                f_loc, join, e.pos, temp, syntax.INT, _lit(0, syntax.INT, e.pos),
                synthetic=True))
            return VarRef(e.pos, syntax.INT, _unqualified(temp)), join
        if isinstance(e, Binary):
            left, cur = self.extract_boolean(e.left, cur, line)
            right, cur = self.extract_boolean(e.right, cur, line)
            out = Binary(e.pos, e.ctype, e.op, left, right)
            out.cmp_type = e.cmp_type
            return out, cur
        if isinstance(e, Unary):
            inner, cur = self.extract_boolean(e.operand, cur, line)
            return Unary(e.pos, e.ctype, e.op, inner), cur
        if isinstance(e, Cast):
            inner, cur = self.extract_boolean(e.operand, cur, line)
            return Cast(e.pos, e.ctype, e.target, inner), cur
        return e, cur

    # -- conditions -------------------------------------------------------

    def lower_condition(self, cond: Expr, cur: Location, t_target: Location,
                        f_target: Location, line: int):
        """Branch from *cur* to t_target / f_target on *cond* (unqualified)."""
        if isinstance(cond, Binary) and cond.op == "&&":
            mid = self.cfa.new_location(self.fn.name, line)
            self.lower_condition(cond.left, cur, mid, f_target, line)
            self.lower_condition(cond.right, mid, t_target, f_target, line)
            return
        if isinstance(cond, Binary) and cond.op == "||":
            mid = self.cfa.new_location(self.fn.name, line)
            self.lower_condition(cond.left, cur, t_target, mid, line)
            self.lower_condition(cond.right, mid, t_target, f_target, line)
            return
        if isinstance(cond, Unary) and cond.op == "!":
            self.lower_condition(cond.operand, cur, f_target, t_target, line)
            return
        q = self.qualify_expr(cond)
        cur = self.guards(q, cur, line)
        self.cfa.add_edge(AssumeEdge(cur, t_target, cond.pos, q, True))
        self.cfa.add_edge(AssumeEdge(cur, f_target, cond.pos, q, False))

    # -- statements -------------------------------------------------------

    def lower_stmts(self, stmts: list, cur: Location | None):
        for s in stmts:
            if cur is None:
                # unreachable code after goto/return/no-return call; C allows
                # it, and a label inside can re-enter the flow
                if isinstance(s, LabelStmt):
                    pre, post = self.label_points(s.name)
                    if pre.line == 0:
                        pre.line = post.line = s.pos.line if s.pos else 0
                    self.cfa.add_edge(LabelEdge(pre, post, s.pos, s.name))
                    cur = post
                continue
            cur = self.lower_stmt(s, cur)
        return cur

    def label_points(self, name: str) -> tuple[Location, Location]:
        if name not in self.labels:
            pre = self.cfa.new_location(self.fn.name, 0)
            post = self.cfa.new_location(self.fn.name, 0)
            self.labels[name] = (pre, post)
        return self.labels[name]

    def lower_stmt(self, s, cur: Location):
        cfa = self.cfa
        fn = self.fn.name
        line = s.pos.line if s.pos else 0

        if isinstance(s, Decl):
            var = self.qualify(s.name)
            cfa.var_types[var] = s.ctype
            if s.init is not None and _call_of(s.init) is not None:
                nxt = cfa.new_location(fn, line)
                cfa.add_edge(DeclEdge(cur, nxt, s.pos, var, s.ctype, None))
                return self.lower_call_assign(s.init, var, s.ctype, nxt, s.pos)
            init = None
            if s.init is not None:
                init, cur = self.eval_value(s.init, cur, line)
            nxt = cfa.new_location(fn, line)
            cfa.add_edge(DeclEdge(cur, nxt, s.pos, var, s.ctype, init))
            return nxt

        if isinstance(s, Assign):
            var = self.qualify(s.name)
            ctype = cfa.var_types[var]
            if _call_of(s.expr) is not None:
                return self.lower_call_assign(s.expr, var, ctype, cur, s.pos)
            rhs, cur = self.eval_value(s.expr, cur, line)
            nxt = cfa.new_location(fn, line)
            cfa.add_edge(AssignEdge(cur, nxt, s.pos, var, ctype, rhs))
            return nxt

        if isinstance(s, ExprStmt):
            call = s.expr
            assert isinstance(call, Call)
            return self.lower_call_assign(call, None, None, cur, s.pos)

        if isinstance(s, If):
            t_loc = cfa.new_location(fn, line)
            f_loc = cfa.new_location(fn, line)
            self.lower_condition(s.cond, cur, t_loc, f_loc, line)
            t_end = self.lower_stmts(s.then, t_loc)
            f_end = self.lower_stmts(s.els, f_loc) if s.els is not None else f_loc
            if t_end is None and f_end is None:
                return None
            if t_end is None:
                return f_end
            if f_end is None:
                return t_end
            join = cfa.new_location(fn, line)
            cfa.add_edge(NoopEdge(t_end, join, s.pos, "if join"))
            cfa.add_edge(NoopEdge(f_end, join, s.pos, "if join"))
            return join

        if isinstance(s, While):
            head = cfa.new_location(fn, line)
            cfa.add_edge(NoopEdge(cur, head, s.pos, "enter loop"))
            body = cfa.new_location(fn, line)
            after = cfa.new_location(fn, line)
            self.lower_condition(s.cond, head, body, after, line)
            body_end = self.lower_stmts(s.body, body)
            if body_end is not None:
                cfa.add_edge(NoopEdge(body_end, head, s.pos, "loop back"))
            return after

        if isinstance(s, LabelStmt):
            pre, post = self.label_points(s.name)
            if pre.line == 0:
                pre.line = post.line = line
            cfa.add_edge(NoopEdge(cur, pre, s.pos, "label fallthrough"))
            cfa.add_edge(LabelEdge(pre, post, s.pos, s.name))
            return post

        if isinstance(s, Goto):
            pre, _post = self.label_points(s.label)
            cfa.add_edge(NoopEdge(cur, pre, s.pos, "goto"))
            return None

        if isinstance(s, Return):
            retval = f"{fn}::__retval__"
            expr = None
            if s.expr is not None:
                expr, cur = self.eval_value(s.expr, cur, line)
            cfa.add_edge(ReturnEdge(cur, self.exit_loc, s.pos, expr, retval,
                                    self.fn.ret_type))
            return None

        raise VerifierError(f"cannot lower statement {s!r}")

    def lower_call_assign(self, expr: Expr, lhs: str | None,
                          lhs_type: str | None, cur: Location, pos):
        """Lower ``lhs = call(...)`` (or a bare call); expr may wrap the call
        in casts."""
        cfa = self.cfa
        fn = self.fn.name
        line = pos.line if pos else 0
        call = _call_of(expr)
        callee = call.name

        if callee in NONDET_CALLS:
            nxt = cfa.new_location(fn, line)
            if lhs is None:
                lhs = self.fresh_temp(NONDET_CALLS[callee])
                lhs_type = NONDET_CALLS[callee]
            cfa.add_edge(NondetEdge(cur, nxt, pos, lhs, lhs_type, callee))
            return nxt

        if callee in NORETURN:
            cfa.add_edge(ExternalCallEdge(cur, self.halt(), pos, callee))
            return None

        target = self.prog.function(callee)
        assert target is not None, f"call to undefined '{callee}'"
        args = []
        for a in call.args:
            qa, cur = self.eval_value(a, cur, line)
            args.append(qa)
        self.call_counter += 1
        call_id = self.call_counter
        return_site = cfa.new_location(fn, line)
        param_vars = [f"{callee}::{p.name}" for p in target.params]
        param_types = [p.ctype for p in target.params]
        edge = CallEdge(cur, cfa.function_entries[callee], pos, callee, args,
                        param_vars, param_types, return_site, call_id)
        cfa.add_edge(edge)
        if lhs is not None:
            retref: Expr = VarRef(pos, target.ret_type,
                                  f"{callee}::__retval__")
            retref = _rewrap(expr, retref)
            assign = (lhs, lhs_type, retref)
        else:
            assign = None
        ret_edge = FunctionReturnEdge(cfa.function_exits[callee], return_site,
                                      pos, callee, call_id, assign)
        cfa.add_edge(ret_edge)
        return return_site


def _call_of(e: Expr):
    """The Call node if *e* is a call possibly wrapped in casts, else None."""
    while isinstance(e, Cast):
        e = e.operand
    return e if isinstance(e, Call) else None


def _rewrap(wrapper: Expr, inner: Expr) -> Expr:
    """Re-apply the cast layers of *wrapper* (down to its call) onto *inner*."""
    if isinstance(wrapper, Cast):
        return Cast(wrapper.pos, wrapper.ctype, wrapper.target,
                    _rewrap(wrapper.operand, inner))
    return inner


def _unqualified(qualified: str) -> str:
    return qualified.split("::", 1)[1]


def build_cfa(prog, entry: str = "main", source_path: str = "<input>",
              source_text: str = "") -> Cfa:
    """Build the interprocedural CFA for a type-checked program."""
    fn = prog.function(entry)
    if fn is None:
        raise VerifierError(f"entry function '{entry}' is not defined")
    if fn.params:
        raise VerifierError(f"entry function '{entry}' must not take "
                            f"parameters")
    cfa = Cfa(prog, entry, source_path, source_text)
    for f in prog.functions:
        cfa.function_entries[f.name] = cfa.new_location(
            f.name, f.pos.line if f.pos else 0, "entry")
        cfa.function_exits[f.name] = cfa.new_location(f.name, 0, "exit")
    builder = _Builder(cfa, prog)
    for f in prog.functions:
        builder.lower_function(f)
    cfa.mark_loop_heads()
    cfa.renumber()
    cfa.validate()
    return cfa
