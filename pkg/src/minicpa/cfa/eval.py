"""Concrete 32-bit evaluation of expressions.

Values are stored as unsigned 32-bit patterns; signedness is applied per
operation from the types the checker annotated.  The semantics below are
total and mirror the SMT encoding bit for bit, including the corner cases C
leaves undefined (shift amounts ≥ 32 give 0 / sign fill, division overflow
wraps, division by zero follows the SMT-LIB convention — the CFA builder
guards real divisions, so the last one is unreachable in lowered programs).
"""

from __future__ import annotations

from minicpa.frontend import syntax
from minicpa.frontend.syntax import (
    Binary, Cast, Expr, IntLit, OverflowCheck, Unary, VarRef,
)

MASK = 0xFFFFFFFF
INT_MIN, INT_MAX = -(2 ** 31), 2 ** 31 - 1


def to_signed(v: int) -> int:
    return v - 0x100000000 if v & 0x80000000 else v


def interpret_as(v: int, ctype: str) -> int:
    return to_signed(v) if ctype == syntax.INT else v


def truthy(v: int) -> bool:
    return v != 0


def _divide(a: int, b: int, signed: bool) -> int:
    if b == 0:
        if signed:
            return (MASK if to_signed(a) >= 0 else 1)  # -1 or 1
        return MASK
    if signed:
        sa, sb = to_signed(a), to_signed(b)
        q = abs(sa) // abs(sb)
        if (sa < 0) != (sb < 0):
            q = -q
        return q & MASK
    return (a // b) & MASK


def _remainder(a: int, b: int, signed: bool) -> int:
    if b == 0:
        return a
    if signed:
        sa, sb = to_signed(a), to_signed(b)
        r = abs(sa) % abs(sb)
        if sa < 0:
            r = -r
        return r & MASK
    return (a % b) & MASK


def _shift(a: int, b: int, op: str, signed_left: bool) -> int:
    if op == "<<":
        return (a << b) & MASK if b < 32 else 0
    if signed_left:
        sa = to_signed(a)
        return (sa >> min(b, 31)) & MASK
    return a >> b if b < 32 else 0


def _compare(op: str, a: int, b: int, signed: bool) -> int:
    if signed:
        a, b = to_signed(a), to_signed(b)
    if op == "==":
        return int(a == b)
    if op == "!=":
        return int(a != b)
    if op == "<":
        return int(a < b)
    if op == "<=":
        return int(a <= b)
    if op == ">":
        return int(a > b)
    return int(a >= b)


def _overflow_check(e: OverflowCheck, left: int, right: int | None) -> int:
    lo, hi = (INT_MIN, INT_MAX) if e.signed else (0, MASK)
    a = interpret_as(left, syntax.INT if e.signed else syntax.UINT)
    if e.op == "neg":
        return int(not lo <= -a <= hi)
    b = interpret_as(right, syntax.INT if e.signed else syntax.UINT)
    if e.op == "+":
        exact = a + b
    elif e.op == "-":
        exact = a - b
    elif e.op == "*":
        exact = a * b
    elif e.op in ("/", "%"):
        if b == 0:
            return 0  # the zero-divisor guard traps first
        exact = abs(a) // abs(b) * (1 if (a < 0) == (b < 0) else -1)
    else:
        raise ValueError(f"unknown overflow op {e.op!r}")
    return int(not lo <= exact <= hi)


def eval_expr(e: Expr, lookup) -> int | None:
    """Evaluate *e* to an unsigned 32-bit pattern.

    ``lookup(qualified_name)`` supplies variable values and may return None
    for unknown variables; unknowns propagate to a None result (used by the
    value domain; the interpreter's lookup is total).
    """
    if isinstance(e, IntLit):
        return e.value & MASK
    if isinstance(e, VarRef):
        return lookup(e.name)
    if isinstance(e, Cast):
        return eval_expr(e.operand, lookup)  # 32-bit to 32-bit: same pattern
    if isinstance(e, Unary):
        v = eval_expr(e.operand, lookup)
        if v is None:
            return None
        if e.op == "-":
            return (-v) & MASK
        if e.op == "~":
            return v ^ MASK
        if e.op == "!":
            return int(v == 0)
        raise ValueError(f"unknown unary {e.op!r}")
    if isinstance(e, OverflowCheck):
        left = eval_expr(e.left, lookup)
        right = eval_expr(e.right, lookup) if e.right is not None else None
        if left is None or (e.right is not None and right is None):
            return None
        return _overflow_check(e, left, right)
    if isinstance(e, Binary):
        op = e.op
        if op in syntax.LOGIC_OPS:
            a = eval_expr(e.left, lookup)
            # short-circuit so that None in an unevaluated arm is harmless
            if op == "&&":
                if a == 0:
                    return 0
                b = eval_expr(e.right, lookup)
                if a is None or b is None:
                    return None
                return int(b != 0)
            if a is not None and a != 0:
                return 1
            b = eval_expr(e.right, lookup)
            if a is None or b is None:
                return None
            return int(b != 0)
        a = eval_expr(e.left, lookup)
        b = eval_expr(e.right, lookup)
        if a is None or b is None:
            return None
        if op in syntax.CMP_OPS:
            return _compare(op, a, b, (e.cmp_type or e.left.ctype) == syntax.INT)
        signed = e.ctype == syntax.INT
        if op == "+":
            return (a + b) & MASK
        if op == "-":
            return (a - b) & MASK
        if op == "*":
            return (a * b) & MASK
        if op == "/":
            return _divide(a, b, signed)
        if op == "%":
            return _remainder(a, b, signed)
        if op == "&":
            return a & b
        if op == "|":
            return a | b
        if op == "^":
            return a ^ b
        if op in ("<<", ">>"):
            return _shift(a, b, op, signed)
        raise ValueError(f"unknown operator {op!r}")
    raise ValueError(f"cannot evaluate {e!r}")
