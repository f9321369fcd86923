"""SSA-based encoding of CFA edges as bitvector formulas.

Variables along a path become indexed versions ``fn::var@i``; every write
bumps the index, reads use the current one.  All terms are 32-bit (QF_BV);
signedness is applied per operation from the checker's type annotations,
exactly mirroring `minicpa.cfa.eval`.
"""

from __future__ import annotations

from minicpa.cfa.model import (
    AssignEdge, AssumeEdge, CallEdge, DeclEdge, Edge, FunctionReturnEdge,
    NondetEdge, ReturnEdge,
)
from minicpa.errors import EncodingError
from minicpa.frontend import syntax
from minicpa.frontend.syntax import (
    Binary, Cast, Expr, IntLit, OverflowCheck, Unary, VarRef,
)
from minicpa.smt import terms as T

SsaMap = dict  # variable name -> current index (>= 1)


def indexed(name: str, index: int) -> str:
    return f"{name}@{index}"


def read(name: str, ssa: SsaMap) -> T.Term:
    return T.var(indexed(name, ssa.setdefault(name, 1)))


def write(name: str, ssa: SsaMap) -> T.Term:
    ssa[name] = ssa.get(name, 1) + 1
    return T.var(indexed(name, ssa[name]))


def encode_expr(e: Expr, ssa: SsaMap) -> T.Term:
    """Encode *e* as a 32-bit bitvector term (comparisons and logic become
    0/1 via ite)."""
    if isinstance(e, IntLit):
        return T.bv_const(e.value)
    if isinstance(e, VarRef):
        return read(e.name, ssa)
    if isinstance(e, Cast):
        return encode_expr(e.operand, ssa)  # 32-bit pattern is the value
    if isinstance(e, Unary):
        if e.op == "!":
            return T.ite(encode_condition(e, ssa), T.bv_const(1),
                         T.bv_const(0))
        a = encode_expr(e.operand, ssa)
        if e.op == "-":
            return T.bvneg(a)
        if e.op == "~":
            return T.bvnot(a)
        raise EncodingError(f"unknown unary operator {e.op!r}")
    if isinstance(e, OverflowCheck):
        return T.ite(encode_condition(e, ssa), T.bv_const(1), T.bv_const(0))
    if isinstance(e, Binary):
        op = e.op
        if op in syntax.CMP_OPS or op in syntax.LOGIC_OPS:
            return T.ite(encode_condition(e, ssa), T.bv_const(1),
                         T.bv_const(0))
        a = encode_expr(e.left, ssa)
        b = encode_expr(e.right, ssa)
        signed = e.ctype == syntax.INT
        if op == "+":
            return T.bvadd(a, b)
        if op == "-":
            return T.bvsub(a, b)
        if op == "*":
            return T.bvmul(a, b)
        if op == "/":
            return T.bvsdiv(a, b) if signed else T.bvudiv(a, b)
        if op == "%":
            return T.bvsrem(a, b) if signed else T.bvurem(a, b)
        if op == "&":
            return T.bvand(a, b)
        if op == "|":
            return T.bvor(a, b)
        if op == "^":
            return T.bvxor(a, b)
        if op == "<<":
            return T.bvshl(a, b)
        if op == ">>":
            return T.bvashr(a, b) if signed else T.bvlshr(a, b)
        raise EncodingError(f"unknown operator {op!r}")
    raise EncodingError(f"cannot encode expression {e!r}")


_CMP = {
    "<": (T.bvslt, T.bvult),
    "<=": (T.bvsle, T.bvule),
}


def encode_condition(e: Expr, ssa: SsaMap) -> T.Term:
    """Encode *e* as a Boolean term using C truth (nonzero)."""
    if isinstance(e, Unary) and e.op == "!":
        return T.not_(encode_condition(e.operand, ssa))
    if isinstance(e, OverflowCheck):
        return _encode_overflow(e, ssa)
    if isinstance(e, Binary):
        if e.op == "&&":
            return T.and_(encode_condition(e.left, ssa),
                          encode_condition(e.right, ssa))
        if e.op == "||":
            return T.or_(encode_condition(e.left, ssa),
                         encode_condition(e.right, ssa))
        if e.op in syntax.CMP_OPS:
            a = encode_expr(e.left, ssa)
            b = encode_expr(e.right, ssa)
            signed = (e.cmp_type or e.left.ctype) == syntax.INT
            if e.op == "==":
                return T.eq(a, b)
            if e.op == "!=":
                return T.not_(T.eq(a, b))
            flipped = e.op in (">", ">=")
            if flipped:
                a, b = b, a
            s, u = _CMP["<" if e.op in ("<", ">") else "<="]
            return (s if signed else u)(a, b)
    return T.not_(T.eq(encode_expr(e, ssa), T.bv_const(0)))


def _encode_overflow(e: OverflowCheck, ssa: SsaMap) -> T.Term:
    """Exact-arithmetic overflow condition via 64-bit extension."""
    ext = T.sign_extend if e.signed else T.zero_extend
    a = ext(encode_expr(e.left, ssa), 32)
    if e.op == "neg":
        exact = T.bvneg(a)
    else:
        b = ext(encode_expr(e.right, ssa), 32)
        if e.op == "+":
            exact = T.bvadd(a, b)
        elif e.op == "-":
            exact = T.bvsub(a, b)
        elif e.op == "*":
            exact = T.bvmul(a, b)
        elif e.op == "/":
            # only INT_MIN / -1 overflows; zero divisors are guarded away
            return T.and_(
                T.eq(encode_expr(e.left, ssa), T.bv_const(0x80000000)),
                T.eq(encode_expr(e.right, ssa), T.bv_const(0xFFFFFFFF)))
        else:
            raise EncodingError(f"unknown overflow op {e.op!r}")
    if e.signed:
        low = T.bv_const(-(2 ** 31), 64)
        high = T.bv_const(2 ** 31 - 1, 64)
        return T.or_(T.bvslt(exact, low), T.bvslt(high, exact))
    return T.bvult(T.bv_const(0xFFFFFFFF, 64), exact)


def encode_edge(edge: Edge, ssa: SsaMap) -> tuple[T.Term, SsaMap]:
    """Encode one edge against *ssa*; returns the constraint and the updated
    map (the input map is not modified)."""
    ssa = dict(ssa)
    if isinstance(edge, AssumeEdge):
        cond = encode_condition(edge.cond, ssa)
        return (cond if edge.truth else T.not_(cond)), ssa
    if isinstance(edge, DeclEdge):
        if edge.init is None:
            write(edge.var, ssa)  # unconstrained fresh version
            return T.TRUE, ssa
        rhs = encode_expr(edge.init, ssa)
        return T.eq(write(edge.var, ssa), rhs), ssa
    if isinstance(edge, AssignEdge):
        rhs = encode_expr(edge.rhs, ssa)
        return T.eq(write(edge.var, ssa), rhs), ssa
    if isinstance(edge, NondetEdge):
        write(edge.var, ssa)
        return T.TRUE, ssa
    if isinstance(edge, CallEdge):
        parts = []
        values = [encode_expr(a, ssa) for a in edge.args]
        for param, value in zip(edge.param_vars, values):
            parts.append(T.eq(write(param, ssa), value))
        return T.and_(*parts), ssa
    if isinstance(edge, FunctionReturnEdge):
        if edge.assign is None:
            return T.TRUE, ssa
        lhs, _ctype, expr = edge.assign
        rhs = encode_expr(expr, ssa)
        return T.eq(write(lhs, ssa), rhs), ssa
    if isinstance(edge, ReturnEdge):
        if edge.expr is None:
            write(edge.retval_var, ssa)
            return T.TRUE, ssa
        rhs = encode_expr(edge.expr, ssa)
        return T.eq(write(edge.retval_var, ssa), rhs), ssa
    # LabelEdge, NoopEdge, ExternalCallEdge carry no state change
    return T.TRUE, ssa


def path_formula(edges, ssa: SsaMap | None = None):
    """Encode an edge sequence.

    Returns (formula, final ssa map, nondet reads) where the reads are the
    SSA names of Nondet edge targets in execution order — a model restricted
    to them is an input vector replaying the path.
    """
    ssa = dict(ssa) if ssa else {}
    parts = []
    nondet_reads: list[str] = []
    for edge in edges:
        constraint, ssa = encode_edge(edge, ssa)
        if isinstance(edge, NondetEdge):
            nondet_reads.append(indexed(edge.var, ssa[edge.var]))
        if constraint is not T.TRUE:
            parts.append(constraint)
    return T.and_(*parts), ssa, nondet_reads
