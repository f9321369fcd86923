"""Type checker for the mini-C subset.

Annotates every expression with its 32-bit type, makes the usual arithmetic
conversions explicit by inserting ``Cast`` nodes, and enforces the structural
restrictions of the subset: declare-before-use, no recursion, calls only in
statement position or as the whole right-hand side of an assignment.
"""

from __future__ import annotations

from minicpa.errors import TypeCheckError, UndeclaredVariable
from minicpa.frontend import syntax
from minicpa.frontend.syntax import (
    ARITH_OPS, BIT_OPS, CMP_OPS, INT, LOGIC_OPS, SHIFT_OPS, UINT, VOID,
    Assign, Binary, Call, Cast, Decl, Expr, ExprStmt, FunctionDef, Goto,
    If, IntLit, LabelStmt, OverflowCheck, Param, Program, Return, Unary,
    VarRef, While,
)

# Externals every analysis understands.  Parameters of __assert_fail are
# ignored; the verifier only cares that the call is reached.
KNOWN_EXTERNALS = {
    "__VERIFIER_nondet_uint": UINT,
    "__VERIFIER_nondet_int": INT,
    "__assert_fail": VOID,
    "__VERIFIER_error": VOID,
    "reach_error": VOID,
    "abort": VOID,
}

# Calls that never return; flow after them is unreachable.
NORETURN = {"__assert_fail", "__VERIFIER_error", "reach_error", "abort"}

# Calls treated as nondeterministic input sources.
NONDET_CALLS = {
    "__VERIFIER_nondet_uint": UINT,
    "__VERIFIER_nondet_int": INT,
}


def common_type(a: str, b: str) -> str:
    """Usual arithmetic conversions collapsed to the 32-bit case."""
    return UINT if UINT in (a, b) else INT


def _coerce(e: Expr, target: str) -> Expr:
    if e.ctype == target:
        return e
    cast = Cast(e.pos, target, target, e)
    return cast


class _FunctionChecker:
    def __init__(self, prog: Program, fn: FunctionDef,
                 signatures: dict[str, tuple[str, list | None]]):
        self.prog = prog
        self.fn = fn
        self.signatures = signatures
        self.scope: dict[str, str] = {}
        self.labels: set[str] = set()
        self.gotos: list[Goto] = []
        self.calls: set[str] = set()

    def error(self, msg: str, pos) -> TypeCheckError:
        return TypeCheckError(msg, pos)

    def run(self):
        for p in self.fn.params:
            if not p.name:
                raise self.error(
                    f"unnamed parameter in definition of '{self.fn.name}'",
                    self.fn.pos)
            if p.name in self.scope:
                raise self.error(f"duplicate parameter '{p.name}'", self.fn.pos)
            self.scope[p.name] = p.ctype
        self.check_block(self.fn.body)
        for g in self.gotos:
            if g.label not in self.labels:
                raise self.error(f"goto to undefined label '{g.label}'", g.pos)

    # -- statements --------------------------------------------------------

    def check_block(self, stmts: list):
        for s in stmts:
            self.check_stmt(s)

    def check_stmt(self, s):
        if isinstance(s, Decl):
            if s.name in self.scope:
                raise self.error(f"redeclaration of '{s.name}'", s.pos)
            if s.name in self.signatures:
                raise self.error(
                    f"'{s.name}' is already declared as a function", s.pos)
            if s.init is not None:
                s.init = self.check_rhs(s.init, s.ctype)
            self.scope[s.name] = s.ctype
        elif isinstance(s, Assign):
            target = self.var_type(s.name, s.pos)
            s.expr = self.check_rhs(s.expr, target)
        elif isinstance(s, ExprStmt):
            if not isinstance(s.expr, Call):
                raise self.error(
                    "only calls may be used as expression statements", s.pos)
            self.check_call(s.expr)
        elif isinstance(s, If):
            s.cond = self.check_expr(s.cond)
            self.check_block(s.then)
            if s.els is not None:
                self.check_block(s.els)
        elif isinstance(s, While):
            s.cond = self.check_expr(s.cond)
            self.check_block(s.body)
        elif isinstance(s, LabelStmt):
            if s.name in self.labels:
                raise self.error(f"duplicate label '{s.name}'", s.pos)
            self.labels.add(s.name)
        elif isinstance(s, Goto):
            self.gotos.append(s)
        elif isinstance(s, Return):
            want = self.fn.ret_type
            if s.expr is None:
                if want != VOID:
                    raise self.error(
                        f"'{self.fn.name}' must return a value", s.pos)
            else:
                if want == VOID:
                    raise self.error(
                        f"void function '{self.fn.name}' cannot return a value",
                        s.pos)
                s.expr = self.check_rhs(s.expr, want)
        else:
            raise self.error(f"unexpected statement {s!r}", getattr(s, "pos", None))

    def check_rhs(self, e: Expr, target: str) -> Expr:
        """Right-hand side of an assignment/initializer/return.

        The only place a call with a result may appear is here, as the whole
        expression.
        """
        if isinstance(e, Call):
            ret = self.check_call(e)
            if ret == VOID:
                raise self.error(
                    f"void value of '{e.name}()' used in assignment", e.pos)
            return _coerce(e, target)
        e = self.check_expr(e)
        return _coerce(e, target)

    # -- expressions -------------------------------------------------------

    def var_type(self, name: str, pos) -> str:
        if name not in self.scope:
            raise UndeclaredVariable(name, pos)
        return self.scope[name]

    def check_call(self, e: Call) -> str:
        ret, params = self.signature(e.name, e.pos)
        self.calls.add(e.name)
        if e.name == "__assert_fail":
            # arguments (message/file/line strings in real C) carry no meaning
            # here; accept and ignore whatever was written
            e.args = []
        elif params is not None:
            if len(e.args) != len(params):
                raise self.error(
                    f"'{e.name}' expects {len(params)} argument(s), "
                    f"got {len(e.args)}", e.pos)
            e.args = [_coerce(self.check_expr(a), params[j].ctype)
                      for j, a in enumerate(e.args)]
        else:
            if e.args:
                raise self.error(
                    f"'{e.name}' is declared without a parameter list but "
                    f"called with arguments", e.pos)
        e.ctype = ret
        return ret

    def signature(self, name: str, pos) -> tuple[str, list | None]:
        if name in self.signatures:
            return self.signatures[name]
        if name in KNOWN_EXTERNALS:
            return KNOWN_EXTERNALS[name], []
        raise self.error(f"call to undeclared function '{name}'", pos)

    def check_expr(self, e: Expr) -> Expr:
        if isinstance(e, IntLit):
            if e.unsigned_suffix:
                if not 0 <= e.value <= 0xFFFFFFFF:
                    raise self.error(
                        f"literal {e.value} does not fit in 32 bits", e.pos)
                e.ctype = UINT
            else:
                if not 0 <= e.value <= 0x7FFFFFFF:
                    # decimal literals beyond INT_MAX would be long in C
                    raise self.error(
                        f"literal {e.value} does not fit in a signed 32-bit "
                        f"int (use a U suffix)", e.pos)
                e.ctype = INT
            return e
        if isinstance(e, VarRef):
            e.ctype = self.var_type(e.name, e.pos)
            return e
        if isinstance(e, Cast):
            e.operand = self.check_expr(e.operand)
            e.ctype = e.target
            return e
        if isinstance(e, Unary):
            e.operand = self.check_expr(e.operand)
            if e.op == "!":
                e.ctype = INT
            else:
                e.ctype = e.operand.ctype
            return e
        if isinstance(e, Call):
            raise self.error(
                f"call to '{e.name}' is only allowed as a statement or as "
                f"the whole right-hand side of an assignment", e.pos)
        if isinstance(e, Binary):
            e.left = self.check_expr(e.left)
            e.right = self.check_expr(e.right)
            lt, rt = e.left.ctype, e.right.ctype
            if e.op in LOGIC_OPS:
                e.ctype = INT
            elif e.op in SHIFT_OPS:
                # C types shifts by the (promoted) left operand only
                e.ctype = lt
            elif e.op in CMP_OPS:
                ct = common_type(lt, rt)
                e.left = _coerce(e.left, ct)
                e.right = _coerce(e.right, ct)
                e.cmp_type = ct
                e.ctype = INT
            elif e.op in ARITH_OPS or e.op in BIT_OPS:
                ct = common_type(lt, rt)
                e.left = _coerce(e.left, ct)
                e.right = _coerce(e.right, ct)
                e.ctype = ct
            else:
                raise self.error(f"unknown operator '{e.op}'", e.pos)
            return e
        if isinstance(e, OverflowCheck):
            e.ctype = INT
            return e
        raise self.error(f"unexpected expression {e!r}", getattr(e, "pos", None))


def _check_no_recursion(call_graph: dict[str, set[str]]):
    done: dict[str, int] = {}  # 0 = on stack, 1 = finished

    def visit(fn: str, chain: list[str]):
        state = done.get(fn)
        if state == 1:
            return
        if state == 0:
            cycle = chain[chain.index(fn):] + [fn]
            raise TypeCheckError(
                "recursion is not supported (call cycle: "
                + " -> ".join(cycle) + ")", None)
        done[fn] = 0
        for callee in sorted(call_graph.get(fn, ())):
            visit(callee, chain + [fn])
        done[fn] = 1

    for fn in call_graph:
        visit(fn, [])


def typecheck(prog: Program, entry: str = "main") -> Program:
    """Annotate *prog* in place with types and return it.

    Raises TypeCheckError / UndeclaredVariable on ill-typed programs.
    """
    signatures: dict[str, tuple[str, list | None]] = {}
    for ext in prog.externs:
        sig = (ext.ret_type, ext.params)
        if ext.name in signatures and signatures[ext.name] != sig:
            raise TypeCheckError(
                f"conflicting declarations of '{ext.name}'", ext.pos)
        signatures[ext.name] = sig
    for fn in prog.functions:
        if fn.name in {f.name for f in prog.functions if f is not fn}:
            raise TypeCheckError(f"redefinition of '{fn.name}'", fn.pos)
        declared = signatures.get(fn.name)
        if declared is not None and declared[0] != fn.ret_type:
            raise TypeCheckError(
                f"conflicting return type for '{fn.name}'", fn.pos)
        signatures[fn.name] = (fn.ret_type, fn.params)

    defined = {f.name for f in prog.functions}
    if entry not in defined:
        raise TypeCheckError(f"entry function '{entry}' is not defined", None)

    call_graph: dict[str, set[str]] = {}
    for fn in prog.functions:
        checker = _FunctionChecker(prog, fn, signatures)
        checker.run()
        call_graph[fn.name] = {c for c in checker.calls if c in defined}
        for callee in checker.calls:
            if callee not in defined and callee not in KNOWN_EXTERNALS:
                raise TypeCheckError(
                    f"function '{callee}' is declared but never defined and "
                    f"is not a known external", fn.pos)
    _check_no_recursion(call_graph)
    return prog
