"""Parse SMT-LIB2 term s-expressions into the interned term DAG.

Used by the bundled solver front end, by predicate-map import, and by tests
that round-trip rendered formulas.
"""

from __future__ import annotations

from minicpa.smt import terms
from minicpa.smt.sexpr import SexprError
from minicpa.smt.terms import BOOL, BV, Term


class SmtParseError(Exception):
    pass


def parse_sort(sx):
    if sx == "Bool":
        return BOOL
    if isinstance(sx, list) and len(sx) == 3 and sx[0] == "_" and sx[1] == "BitVec":
        return BV(int(sx[2]))
    raise SmtParseError(f"unsupported sort: {sx}")


def _parse_literal(tok: str) -> Term | None:
    if tok.startswith("#x"):
        return terms.bv_const(int(tok[2:], 16), 4 * (len(tok) - 2))
    if tok.startswith("#b"):
        return terms.bv_const(int(tok[2:], 2), len(tok) - 2)
    return None


_LEFT_ASSOC = {
    "bvadd": terms.bvadd, "bvsub": terms.bvsub, "bvmul": terms.bvmul,
    "bvand": terms.bvand, "bvor": terms.bvor, "bvxor": terms.bvxor,
}

_BINOPS = {
    "bvudiv": terms.bvudiv, "bvsdiv": terms.bvsdiv, "bvurem": terms.bvurem,
    "bvsrem": terms.bvsrem, "bvshl": terms.bvshl, "bvlshr": terms.bvlshr,
    "bvashr": terms.bvashr, "bvult": terms.bvult, "bvule": terms.bvule,
    "bvslt": terms.bvslt, "bvsle": terms.bvsle,
}

_FLIPPED = {"bvugt": terms.bvult, "bvuge": terms.bvule,
            "bvsgt": terms.bvslt, "bvsge": terms.bvsle}


def parse_term(sx, scope: dict) -> Term:
    """``scope`` maps declared/let-bound names to terms."""
    if isinstance(sx, str):
        lit = _parse_literal(sx)
        if lit is not None:
            return lit
        if sx == "true":
            return terms.TRUE
        if sx == "false":
            return terms.FALSE
        t = scope.get(sx)
        if t is None:
            raise SmtParseError(f"unknown symbol: {sx}")
        return t
    if not sx:
        raise SmtParseError("empty application")
    head = sx[0]
    if head == "_":
        # (_ bvN width)
        if len(sx) == 3 and isinstance(sx[1], str) and sx[1].startswith("bv"):
            return terms.bv_const(int(sx[1][2:]), int(sx[2]))
        raise SmtParseError(f"unsupported indexed identifier: {sx}")
    if isinstance(head, list):
        # ((_ zero_extend n) t) / ((_ sign_extend n) t) / ((_ extract hi lo) t)
        if len(head) >= 2 and head[0] == "_":
            kind = head[1]
            arg = parse_term(sx[1], scope)
            if kind == "zero_extend":
                return terms.zero_extend(arg, int(head[2]))
            if kind == "sign_extend":
                return terms.sign_extend(arg, int(head[2]))
            if kind == "extract":
                return terms.extract(arg, int(head[2]), int(head[3]))
        raise SmtParseError(f"unsupported application head: {head}")
    if head == "let":
        bindings, body = sx[1], sx[2]
        inner = dict(scope)
        for b in bindings:
            inner[b[0]] = parse_term(b[1], scope)  # parallel let: outer scope
        return parse_term(body, inner)
    args = [parse_term(a, scope) for a in sx[1:]]
    if head in _LEFT_ASSOC:
        acc = args[0]
        for a in args[1:]:
            acc = _LEFT_ASSOC[head](acc, a)
        return acc
    if head in _BINOPS:
        _expect(sx, len(args) == 2)
        return _BINOPS[head](args[0], args[1])
    if head in _FLIPPED:
        _expect(sx, len(args) == 2)
        return _FLIPPED[head](args[1], args[0])
    if head == "bvneg":
        return terms.bvneg(args[0])
    if head == "bvnot":
        return terms.bvnot(args[0])
    if head == "=":
        acc = terms.TRUE
        for x, y in zip(args, args[1:]):
            acc = terms.and_(acc, terms.eq(x, y))
        return acc
    if head == "distinct":
        parts = []
        for i in range(len(args)):
            for j in range(i + 1, len(args)):
                parts.append(terms.not_(terms.eq(args[i], args[j])))
        return terms.and_(*parts)
    if head == "not":
        _expect(sx, len(args) == 1)
        return terms.not_(args[0])
    if head == "and":
        return terms.and_(*args)
    if head == "or":
        return terms.or_(*args)
    if head == "=>":
        acc = args[-1]
        for a in reversed(args[:-1]):
            acc = terms.implies(a, acc)
        return acc
    if head == "xor":
        acc = args[0]
        for a in args[1:]:
            acc = terms.not_(terms.iff(acc, a))
        return acc
    if head == "ite":
        _expect(sx, len(args) == 3)
        return terms.ite(args[0], args[1], args[2])
    if head == "concat":
        _expect(sx, len(args) == 2)
        a, b = args
        w = a.width + b.width
        return terms.bvor(
            terms.bvshl(terms.zero_extend(a, b.width), terms.bv_const(b.width, w)),
            terms.zero_extend(b, a.width),
        )
    raise SmtParseError(f"unsupported operator: {head}")


def _expect(sx, ok: bool):
    if not ok:
        raise SmtParseError(f"bad arity in {sx}")


def parse_value_token(sx) -> int:
    """Parse a value term from a get-value response into an unsigned int."""
    if isinstance(sx, str):
        lit = _parse_literal(sx)
        if lit is not None:
            return lit.attr
        if sx == "true":
            return 1
        if sx == "false":
            return 0
        if sx.isdigit():
            return int(sx)
        raise SexprError(f"unparseable value: {sx}")
    if len(sx) == 3 and sx[0] == "_" and sx[1].startswith("bv"):
        return int(sx[1][2:])
    raise SexprError(f"unparseable value: {sx}")
