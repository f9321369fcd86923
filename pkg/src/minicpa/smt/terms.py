"""Hash-consed bitvector/boolean terms with normalizing constructors.

Terms are immutable and interned: structurally equal terms are the same
object, so equality checks and dict lookups are O(1).  The constructors fold
constants (using SMT-LIB semantics, e.g. ``bvudiv x 0 = all-ones``) and
canonicalize linear bitvector sums, which keeps path formulas small and makes
learned predicates readable (``x + y == n`` instead of ``(x-1)+(y+1) == n``).
"""

from __future__ import annotations

from typing import Iterable

BOOL = "bool"


def BV(width: int) -> tuple:
    return ("bv", width)


def mask(width: int) -> int:
    return (1 << width) - 1


def to_signed(value: int, width: int) -> int:
    value &= mask(width)
    if value >= 1 << (width - 1):
        return value - (1 << width)
    return value


def to_unsigned(value: int, width: int) -> int:
    return value & mask(width)


class Term:
    """One node of the interned term DAG.

    ``attr`` holds the extra payload: the value for constants, the name for
    variables, (hi, lo) for extract, the extension amount for *_extend.
    """

    __slots__ = ("op", "args", "attr", "sort", "tid")

    def __init__(self, op, args, attr, sort, tid):
        self.op = op
        self.args = args
        self.attr = attr
        self.sort = sort
        self.tid = tid

    @property
    def width(self) -> int:
        if self.sort == BOOL:
            raise ValueError("boolean term has no width")
        return self.sort[1]

    def is_const(self) -> bool:
        return self.op == "const" or self.op in ("true", "false")

    def __repr__(self):
        from minicpa.smt.render import render_term

        return f"<{render_term(self)}>"

    # Interned: identity is structural equality.  Default object hash/eq.


_table: dict = {}
_next_id = [0]


def _mk(op, args=(), attr=None, sort=BOOL) -> Term:
    key = (op, tuple(a.tid for a in args), attr, sort)
    t = _table.get(key)
    if t is None:
        t = Term(op, tuple(args), attr, sort, _next_id[0])
        _next_id[0] += 1
        _table[key] = t
    return t


TRUE = _mk("true")
FALSE = _mk("false")


def bv_const(value: int, width: int = 32) -> Term:
    return _mk("const", (), value & mask(width), BV(width))


def var(name: str, width: int = 32) -> Term:
    return _mk("var", (), name, BV(width))


def bool_const(b: bool) -> Term:
    return TRUE if b else FALSE


# ---------------------------------------------------------------------------
# Linear normalization helpers


def _decompose(t: Term):
    """Split a bv term into (constant, {atom: coefficient}) modulo 2^width."""
    w = t.width
    m = mask(w)
    if t.op == "const":
        return t.attr, {}
    if t.op == "bvadd":
        c1, m1 = _decompose(t.args[0])
        c2, m2 = _decompose(t.args[1])
        for a, k in m2.items():
            m1[a] = (m1.get(a, 0) + k) & m
        return (c1 + c2) & m, m1
    if t.op == "bvsub":
        c1, m1 = _decompose(t.args[0])
        c2, m2 = _decompose(t.args[1])
        for a, k in m2.items():
            m1[a] = (m1.get(a, 0) - k) & m
        return (c1 - c2) & m, m1
    if t.op == "bvneg":
        c1, m1 = _decompose(t.args[0])
        return (-c1) & m, {a: (-k) & m for a, k in m1.items()}
    if t.op == "bvmul":
        l, r = t.args
        if l.op == "const" or r.op == "const":
            k0 = l.attr if l.op == "const" else r.attr
            other = r if l.op == "const" else l
            c1, m1 = _decompose(other)
            return (c1 * k0) & m, {a: (k * k0) & m for a, k in m1.items()}
    return 0, {t: 1}


def _atom_key(t: Term):
    if t.op == "var":
        return (0, t.attr, t.tid)
    return (1, "", t.tid)


def _recompose(const: int, coeffs: dict, width: int) -> Term:
    m = mask(width)
    const &= m
    pos, neg = [], []
    half = 1 << (width - 1)
    for atom in sorted(coeffs, key=_atom_key):
        k = coeffs[atom] & m
        if k == 0:
            continue
        if k == 1:
            pos.append(atom)
        elif k == m:  # -1
            neg.append(atom)
        elif k > half:
            neg.append(_mk("bvmul", (bv_const((-k) & m, width), atom), None, BV(width)))
        else:
            pos.append(_mk("bvmul", (bv_const(k, width), atom), None, BV(width)))
    acc = None
    for p in pos:
        acc = p if acc is None else _mk("bvadd", (acc, p), None, BV(width))
    for n in neg:
        if acc is None:
            acc = _mk("bvneg", (n,), None, BV(width))
        else:
            acc = _mk("bvsub", (acc, n), None, BV(width))
    if acc is None:
        return bv_const(const, width)
    if const == 0:
        return acc
    if const > half:
        return _mk("bvsub", (acc, bv_const((-const) & m, width)), None, BV(width))
    return _mk("bvadd", (acc, bv_const(const, width)), None, BV(width))


def _linear(t: Term) -> Term:
    const, coeffs = _decompose(t)
    return _recompose(const, coeffs, t.width)


# ---------------------------------------------------------------------------
# Bitvector constructors


def bvadd(a: Term, b: Term) -> Term:
    return _linear(_mk("bvadd", (a, b), None, a.sort))


def bvsub(a: Term, b: Term) -> Term:
    return _linear(_mk("bvsub", (a, b), None, a.sort))


def bvneg(a: Term) -> Term:
    return _linear(_mk("bvneg", (a,), None, a.sort))


def bvmul(a: Term, b: Term) -> Term:
    if a.op == "const" and b.op == "const":
        return bv_const(a.attr * b.attr, a.width)
    if a.op == "const" or b.op == "const":
        return _linear(_mk("bvmul", (a, b), None, a.sort))
    if _atom_key(b) < _atom_key(a):
        a, b = b, a
    return _mk("bvmul", (a, b), None, a.sort)


def bvudiv(a: Term, b: Term) -> Term:
    w = a.width
    if b.op == "const":
        if b.attr == 0:
            return bv_const(mask(w), w)
        if a.op == "const":
            return bv_const(a.attr // b.attr, w)
        if b.attr == 1:
            return a
    return _mk("bvudiv", (a, b), None, a.sort)


def bvurem(a: Term, b: Term) -> Term:
    w = a.width
    if b.op == "const":
        if b.attr == 0:
            return a
        if a.op == "const":
            return bv_const(a.attr % b.attr, w)
        if b.attr == 1:
            return bv_const(0, w)
    return _mk("bvurem", (a, b), None, a.sort)


def _sdiv_const(x: int, y: int, w: int) -> int:
    xs, ys = to_signed(x, w), to_signed(y, w)
    if ys == 0:
        return mask(w) if xs >= 0 else 1
    q = abs(xs) // abs(ys)
    if (xs < 0) != (ys < 0):
        q = -q
    return q & mask(w)


def _srem_const(x: int, y: int, w: int) -> int:
    xs, ys = to_signed(x, w), to_signed(y, w)
    if ys == 0:
        return x & mask(w)
    r = abs(xs) % abs(ys)
    if xs < 0:
        r = -r
    return r & mask(w)


def bvsdiv(a: Term, b: Term) -> Term:
    if a.op == "const" and b.op == "const":
        return bv_const(_sdiv_const(a.attr, b.attr, a.width), a.width)
    if b.op == "const" and b.attr == 1:
        return a
    return _mk("bvsdiv", (a, b), None, a.sort)


def bvsrem(a: Term, b: Term) -> Term:
    if a.op == "const" and b.op == "const":
        return bv_const(_srem_const(a.attr, b.attr, a.width), a.width)
    return _mk("bvsrem", (a, b), None, a.sort)


def _bitwise(op, a: Term, b: Term, fold) -> Term:
    w = a.width
    if a.op == "const" and b.op == "const":
        return bv_const(fold(a.attr, b.attr), w)
    # canonical operand order for commutative bit ops
    if _atom_key(b) < _atom_key(a):
        a, b = b, a
    if a.op == "const":
        if op == "bvand":
            if a.attr == 0:
                return bv_const(0, w)
            if a.attr == mask(w):
                return b
        elif op == "bvor":
            if a.attr == 0:
                return b
            if a.attr == mask(w):
                return bv_const(mask(w), w)
        elif op == "bvxor" and a.attr == 0:
            return b
    if a is b:
        if op == "bvxor":
            return bv_const(0, w)
        return a  # and/or idempotent
    return _mk(op, (a, b), None, BV(w))


def bvand(a, b):
    return _bitwise("bvand", a, b, lambda x, y: x & y)


def bvor(a, b):
    return _bitwise("bvor", a, b, lambda x, y: x | y)


def bvxor(a, b):
    return _bitwise("bvxor", a, b, lambda x, y: x ^ y)


def bvnot(a: Term) -> Term:
    if a.op == "const":
        return bv_const(~a.attr, a.width)
    if a.op == "bvnot":
        return a.args[0]
    return _mk("bvnot", (a,), None, a.sort)


def bvshl(a: Term, b: Term) -> Term:
    w = a.width
    if b.op == "const":
        if b.attr >= w:
            return bv_const(0, w)
        if b.attr == 0:
            return a
        if a.op == "const":
            return bv_const(a.attr << b.attr, w)
    return _mk("bvshl", (a, b), None, a.sort)


def bvlshr(a: Term, b: Term) -> Term:
    w = a.width
    if b.op == "const":
        if b.attr >= w:
            return bv_const(0, w)
        if b.attr == 0:
            return a
        if a.op == "const":
            return bv_const(a.attr >> b.attr, w)
    return _mk("bvlshr", (a, b), None, a.sort)


def bvashr(a: Term, b: Term) -> Term:
    w = a.width
    if b.op == "const":
        if a.op == "const":
            s = to_signed(a.attr, w)
            return bv_const(s >> min(b.attr, w - 1), w)
        if b.attr == 0:
            return a
        if b.attr >= w:
            b = bv_const(w, w)  # canonical saturated shift
    return _mk("bvashr", (a, b), None, a.sort)


def zero_extend(a: Term, extra: int) -> Term:
    if extra == 0:
        return a
    w = a.width + extra
    if a.op == "const":
        return bv_const(a.attr, w)
    return _mk("zero_extend", (a,), extra, BV(w))


def sign_extend(a: Term, extra: int) -> Term:
    if extra == 0:
        return a
    w = a.width + extra
    if a.op == "const":
        return bv_const(to_signed(a.attr, a.width), w)
    return _mk("sign_extend", (a,), extra, BV(w))


def extract(a: Term, hi: int, lo: int) -> Term:
    w = hi - lo + 1
    if w == a.width:
        return a
    if a.op == "const":
        return bv_const(a.attr >> lo, w)
    return _mk("extract", (a,), (hi, lo), BV(w))


# ---------------------------------------------------------------------------
# Predicates and boolean structure


def eq(a: Term, b: Term) -> Term:
    if a is b:
        return TRUE
    if a.op == "const" and b.op == "const":
        return bool_const(a.attr == b.attr)
    if a.sort == BOOL:
        return iff(a, b)
    if a.op == "const":  # constants go to the right
        a, b = b, a
    elif b.op != "const" and _atom_key(b) < _atom_key(a):
        a, b = b, a
    return _mk("=", (a, b), None, BOOL)


def _cmp(op, a: Term, b: Term, fold) -> Term:
    if a.op == "const" and b.op == "const":
        return bool_const(fold(a.attr, b.attr, a.width))
    if a is b:
        return bool_const(fold(0, 0, a.width))
    return _mk(op, (a, b), None, BOOL)


def bvult(a, b):
    return _cmp("bvult", a, b, lambda x, y, w: x < y)


def bvule(a, b):
    return _cmp("bvule", a, b, lambda x, y, w: x <= y)


def bvslt(a, b):
    return _cmp("bvslt", a, b, lambda x, y, w: to_signed(x, w) < to_signed(y, w))


def bvsle(a, b):
    return _cmp("bvsle", a, b, lambda x, y, w: to_signed(x, w) <= to_signed(y, w))


def not_(a: Term) -> Term:
    if a is TRUE:
        return FALSE
    if a is FALSE:
        return TRUE
    if a.op == "not":
        return a.args[0]
    return _mk("not", (a,), None, BOOL)


def and_(*parts: Term) -> Term:
    flat = []
    for p in parts:
        if p is TRUE:
            continue
        if p is FALSE:
            return FALSE
        if p.op == "and":
            flat.extend(p.args)
        else:
            flat.append(p)
    dedup = []
    seen = set()
    for p in flat:
        if p.tid not in seen:
            seen.add(p.tid)
            dedup.append(p)
    if not dedup:
        return TRUE
    if len(dedup) == 1:
        return dedup[0]
    return _mk("and", tuple(dedup), None, BOOL)


def or_(*parts: Term) -> Term:
    flat = []
    for p in parts:
        if p is FALSE:
            continue
        if p is TRUE:
            return TRUE
        if p.op == "or":
            flat.extend(p.args)
        else:
            flat.append(p)
    dedup = []
    seen = set()
    for p in flat:
        if p.tid not in seen:
            seen.add(p.tid)
            dedup.append(p)
    if not dedup:
        return FALSE
    if len(dedup) == 1:
        return dedup[0]
    return _mk("or", tuple(dedup), None, BOOL)


def implies(a: Term, b: Term) -> Term:
    return or_(not_(a), b)


def iff(a: Term, b: Term) -> Term:
    if a is b:
        return TRUE
    if a is TRUE:
        return b
    if b is TRUE:
        return a
    if a is FALSE:
        return not_(b)
    if b is FALSE:
        return not_(a)
    return and_(implies(a, b), implies(b, a))


def ite(c: Term, a: Term, b: Term) -> Term:
    if c is TRUE:
        return a
    if c is FALSE:
        return b
    if a is b:
        return a
    if a.sort == BOOL:
        return or_(and_(c, a), and_(not_(c), b))
    return _mk("ite", (c, a, b), None, a.sort)


# ---------------------------------------------------------------------------
# Traversals


def walk(t: Term) -> Iterable[Term]:
    """Yield every node of the DAG once (postorder)."""
    seen = set()
    stack = [(t, False)]
    while stack:
        node, done = stack.pop()
        if node.tid in seen:
            continue
        if done:
            seen.add(node.tid)
            yield node
            continue
        stack.append((node, True))
        for a in node.args:
            if a.tid not in seen:
                stack.append((a, False))


def collect_vars(t: Term) -> list[Term]:
    """All variable leaves, sorted by name."""
    out = [n for n in walk(t) if n.op == "var"]
    return sorted(out, key=lambda v: v.attr)


def atoms(t: Term) -> list[Term]:
    """Atomic boolean subterms (comparisons) of a formula."""
    found = []
    for n in walk(t):
        if n.op in ("=", "bvult", "bvule", "bvslt", "bvsle") and n.args[0].sort != BOOL:
            found.append(n)
    return found


def substitute(t: Term, mapping: dict) -> Term:
    """Replace variables (keyed by Term) by terms, rebuilding bottom-up."""
    memo: dict[int, Term] = {}

    def go(node: Term) -> Term:
        hit = memo.get(node.tid)
        if hit is not None:
            return hit
        if node.op == "var":
            res = mapping.get(node, node)
        elif not node.args:
            res = node
        else:
            new_args = [go(a) for a in node.args]
            if all(n is o for n, o in zip(new_args, node.args)):
                res = node
            else:
                res = rebuild(node.op, new_args, node.attr, node.sort)
        memo[node.tid] = res
        return res

    return go(t)


_BINARY = {
    "bvadd": bvadd, "bvsub": bvsub, "bvmul": bvmul, "bvudiv": bvudiv,
    "bvsdiv": bvsdiv, "bvurem": bvurem, "bvsrem": bvsrem, "bvand": bvand,
    "bvor": bvor, "bvxor": bvxor, "bvshl": bvshl, "bvlshr": bvlshr,
    "bvashr": bvashr, "=": eq, "bvult": bvult, "bvule": bvule,
    "bvslt": bvslt, "bvsle": bvsle,
}


def rebuild(op: str, args: list, attr, sort) -> Term:
    """Reconstruct a node through the smart constructors."""
    if op in _BINARY:
        return _BINARY[op](args[0], args[1])
    if op == "bvneg":
        return bvneg(args[0])
    if op == "bvnot":
        return bvnot(args[0])
    if op == "not":
        return not_(args[0])
    if op == "and":
        return and_(*args)
    if op == "or":
        return or_(*args)
    if op == "ite":
        return ite(args[0], args[1], args[2])
    if op == "zero_extend":
        return zero_extend(args[0], attr)
    if op == "sign_extend":
        return sign_extend(args[0], attr)
    if op == "extract":
        return extract(args[0], attr[0], attr[1])
    if op in ("const", "var", "true", "false"):
        return _mk(op, (), attr, sort)
    raise ValueError(f"cannot rebuild op {op}")


# ---------------------------------------------------------------------------
# Ground evaluation (reference semantics, used by tests and the simplifier)


def eval_term(t: Term, env: dict):
    """Evaluate under an assignment {var name: unsigned int}; returns
    an unsigned int for bv terms, bool for boolean terms."""
    memo: dict[int, object] = {}

    def ev(node: Term):
        hit = memo.get(node.tid)
        if hit is not None:
            return hit
        op = node.op
        if op == "const":
            r = node.attr
        elif op == "var":
            r = env[node.attr] & mask(node.width)
        elif op == "true":
            r = True
        elif op == "false":
            r = False
        else:
            a = [ev(x) for x in node.args]
            w = node.args[0].width if node.args and node.args[0].sort != BOOL else None
            if op == "bvadd":
                r = (a[0] + a[1]) & mask(w)
            elif op == "bvsub":
                r = (a[0] - a[1]) & mask(w)
            elif op == "bvneg":
                r = (-a[0]) & mask(w)
            elif op == "bvmul":
                r = (a[0] * a[1]) & mask(w)
            elif op == "bvudiv":
                r = mask(w) if a[1] == 0 else a[0] // a[1]
            elif op == "bvurem":
                r = a[0] if a[1] == 0 else a[0] % a[1]
            elif op == "bvsdiv":
                r = _sdiv_const(a[0], a[1], w)
            elif op == "bvsrem":
                r = _srem_const(a[0], a[1], w)
            elif op == "bvand":
                r = a[0] & a[1]
            elif op == "bvor":
                r = a[0] | a[1]
            elif op == "bvxor":
                r = a[0] ^ a[1]
            elif op == "bvnot":
                r = ~a[0] & mask(w)
            elif op == "bvshl":
                r = 0 if a[1] >= w else (a[0] << a[1]) & mask(w)
            elif op == "bvlshr":
                r = 0 if a[1] >= w else a[0] >> a[1]
            elif op == "bvashr":
                s = to_signed(a[0], w)
                r = (s >> min(a[1], w - 1)) & mask(w)
            elif op == "zero_extend":
                r = a[0]
            elif op == "sign_extend":
                r = to_signed(a[0], node.args[0].width) & mask(node.width)
            elif op == "extract":
                hi, lo = node.attr
                r = (a[0] >> lo) & mask(hi - lo + 1)
            elif op == "=":
                r = a[0] == a[1]
            elif op == "bvult":
                r = a[0] < a[1]
            elif op == "bvule":
                r = a[0] <= a[1]
            elif op == "bvslt":
                r = to_signed(a[0], w) < to_signed(a[1], w)
            elif op == "bvsle":
                r = to_signed(a[0], w) <= to_signed(a[1], w)
            elif op == "not":
                r = not a[0]
            elif op == "and":
                r = all(a)
            elif op == "or":
                r = any(a)
            elif op == "ite":
                r = a[1] if a[0] else a[2]
            else:
                raise ValueError(f"eval: unknown op {op}")
        memo[node.tid] = r
        return r

    return ev(t)
