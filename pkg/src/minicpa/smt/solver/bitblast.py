"""Bit-blasting of bitvector terms to CNF with gate-level structural hashing.

Gate literals use the SAT solver's literal encoding; two reserved literals
stand for constant true/false so constant folding happens at the bit level.
"""

from __future__ import annotations

from minicpa.smt import terms
from minicpa.smt.solver.sat import SatSolver
from minicpa.smt.terms import BOOL, Term


class Blaster:
    def __init__(self, sat: SatSolver):
        self.sat = sat
        self.T = 2 * sat.new_var()
        sat.add_clause([self.T])
        self.F = self.T ^ 1
        self._and: dict = {}
        self._xor: dict = {}
        self._bv: dict[int, list[int]] = {}
        self._bool: dict[int, int] = {}
        self.var_bits: dict[str, list[int]] = {}

    # -- gates ---------------------------------------------------------------

    def and2(self, a: int, b: int) -> int:
        if a == self.F or b == self.F:
            return self.F
        if a == self.T:
            return b
        if b == self.T:
            return a
        if a == b:
            return a
        if a == b ^ 1:
            return self.F
        key = (a, b) if a < b else (b, a)
        g = self._and.get(key)
        if g is None:
            g = 2 * self.sat.new_var()
            add = self.sat.add_clause
            add([g ^ 1, a])
            add([g ^ 1, b])
            add([g, a ^ 1, b ^ 1])
            self._and[key] = g
        return g

    def or2(self, a: int, b: int) -> int:
        return self.and2(a ^ 1, b ^ 1) ^ 1

    def xor2(self, a: int, b: int) -> int:
        if a == self.T:
            return b ^ 1
        if a == self.F:
            return b
        if b == self.T:
            return a ^ 1
        if b == self.F:
            return a
        if a == b:
            return self.F
        if a == b ^ 1:
            return self.T
        # canonicalize on positive literals
        flip = (a & 1) ^ (b & 1)
        a &= ~1
        b &= ~1
        key = (a, b) if a < b else (b, a)
        g = self._xor.get(key)
        if g is None:
            g = 2 * self.sat.new_var()
            add = self.sat.add_clause
            add([g ^ 1, a, b])
            add([g ^ 1, a ^ 1, b ^ 1])
            add([g, a ^ 1, b])
            add([g, a, b ^ 1])
            self._xor[key] = g
        return g ^ flip

    def mux(self, s: int, a: int, b: int) -> int:
        """s ? a : b"""
        if s == self.T:
            return a
        if s == self.F:
            return b
        if a == b:
            return a
        return self.or2(self.and2(s, a), self.and2(s ^ 1, b))

    def full_add(self, a: int, b: int, c: int) -> tuple[int, int]:
        axb = self.xor2(a, b)
        s = self.xor2(axb, c)
        cout = self.or2(self.and2(a, b), self.and2(c, axb))
        return s, cout

    # -- words (LSB-first literal lists) ---------------------------------------

    def const_word(self, value: int, width: int) -> list[int]:
        return [self.T if (value >> i) & 1 else self.F for i in range(width)]

    def add_words(self, A, B, carry=None):
        c = self.F if carry is None else carry
        out = []
        for a, b in zip(A, B):
            s, c = self.full_add(a, b, c)
            out.append(s)
        return out

    def sub_words(self, A, B):
        return self.add_words(A, [b ^ 1 for b in B], self.T)

    def neg_word(self, A):
        return self.sub_words(self.const_word(0, len(A)), A)

    def mul_words(self, A, B):
        w = len(A)
        acc = self.const_word(0, w)
        for i, b in enumerate(B):
            if b == self.F:
                continue
            addend = [self.F] * i + [self.and2(a, b) for a in A[: w - i]]
            acc = self.add_words(acc, addend)
        return acc

    def ult_words(self, A, B) -> int:
        lt = self.F
        for a, b in zip(A, B):  # LSB to MSB; MSB decides last
            lt = self.mux(self.xor2(a, b), b, lt)
        return lt

    def ule_words(self, A, B) -> int:
        return self.ult_words(B, A) ^ 1

    def slt_words(self, A, B) -> int:
        A2 = A[:-1] + [A[-1] ^ 1]
        B2 = B[:-1] + [B[-1] ^ 1]
        return self.ult_words(A2, B2)

    def eq_words(self, A, B) -> int:
        diff = self.F
        for a, b in zip(A, B):
            diff = self.or2(diff, self.xor2(a, b))
        return diff ^ 1

    def mux_words(self, s: int, A, B):
        return [self.mux(s, a, b) for a, b in zip(A, B)]

    def shift_words(self, A, B, kind: str):
        """kind: shl | lshr | ashr.  SMT-LIB semantics (amount >= width
        yields zero / sign fill)."""
        w = len(A)
        fill = A[-1] if kind == "ashr" else self.F
        stages = max(1, (w - 1).bit_length())
        cur = A
        for i in range(stages):
            sbit = B[i] if i < len(B) else self.F
            amt = 1 << i
            if kind == "shl":
                shifted = [self.F] * min(amt, w) + cur[: max(0, w - amt)]
            else:
                shifted = cur[min(amt, w):] + [fill] * min(amt, w)
            cur = self.mux_words(sbit, shifted, cur)
        overshoot = self.F
        for j in range(stages, len(B)):
            overshoot = self.or2(overshoot, B[j])
        if overshoot != self.F:
            cur = self.mux_words(overshoot, [fill] * w, cur)
        return cur

    def udivrem_words(self, A, B) -> tuple[list[int], list[int]]:
        """Restoring division; SMT-LIB div-by-zero results."""
        w = len(A)
        Dx = B + [self.F]  # w+1 bits
        R = self.const_word(0, w + 1)
        Q = [self.F] * w
        for i in range(w - 1, -1, -1):
            R = [A[i]] + R[:w]  # shift left, bring in next dividend bit
            ge = self.ule_words(Dx, R)
            R = self.mux_words(ge, self.sub_words(R, Dx), R)
            Q[i] = ge
        R = R[:w]
        zero = self.eq_words(B, self.const_word(0, w))
        Q = self.mux_words(zero, self.const_word((1 << w) - 1, w), Q)
        R = self.mux_words(zero, A, R)
        return Q, R

    def sdivrem_words(self, A, B) -> tuple[list[int], list[int]]:
        sa, sb = A[-1], B[-1]
        absA = self.mux_words(sa, self.neg_word(A), A)
        absB = self.mux_words(sb, self.neg_word(B), B)
        q, r = self.udivrem_words(absA, absB)
        qneg = self.xor2(sa, sb)
        Q = self.mux_words(qneg, self.neg_word(q), q)
        R = self.mux_words(sa, self.neg_word(r), r)
        return Q, R

    # -- terms -----------------------------------------------------------------

    def bv_bits(self, t: Term) -> list[int]:
        hit = self._bv.get(t.tid)
        if hit is not None:
            return hit
        op = t.op
        w = t.width
        if op == "const":
            bits = self.const_word(t.attr, w)
        elif op == "var":
            name = t.attr
            bits = self.var_bits.get(name)
            if bits is None:
                bits = [2 * self.sat.new_var() for _ in range(w)]
                self.var_bits[name] = bits
        elif op == "ite":
            c = self.bool_lit(t.args[0])
            bits = self.mux_words(c, self.bv_bits(t.args[1]), self.bv_bits(t.args[2]))
        elif op == "zero_extend":
            bits = self.bv_bits(t.args[0]) + [self.F] * t.attr
        elif op == "sign_extend":
            inner = self.bv_bits(t.args[0])
            bits = inner + [inner[-1]] * t.attr
        elif op == "extract":
            hi, lo = t.attr
            bits = self.bv_bits(t.args[0])[lo : hi + 1]
        elif op == "bvnot":
            bits = [b ^ 1 for b in self.bv_bits(t.args[0])]
        elif op == "bvneg":
            bits = self.neg_word(self.bv_bits(t.args[0]))
        else:
            A = self.bv_bits(t.args[0])
            B = self.bv_bits(t.args[1]) if len(t.args) > 1 else None
            if op == "bvadd":
                bits = self.add_words(A, B)
            elif op == "bvsub":
                bits = self.sub_words(A, B)
            elif op == "bvmul":
                bits = self.mul_words(A, B)
            elif op == "bvand":
                bits = [self.and2(a, b) for a, b in zip(A, B)]
            elif op == "bvor":
                bits = [self.or2(a, b) for a, b in zip(A, B)]
            elif op == "bvxor":
                bits = [self.xor2(a, b) for a, b in zip(A, B)]
            elif op == "bvshl":
                bits = self.shift_words(A, B, "shl")
            elif op == "bvlshr":
                bits = self.shift_words(A, B, "lshr")
            elif op == "bvashr":
                bits = self.shift_words(A, B, "ashr")
            elif op == "bvudiv":
                bits, _ = self.udivrem_words(A, B)
            elif op == "bvurem":
                _, bits = self.udivrem_words(A, B)
            elif op == "bvsdiv":
                bits, _ = self.sdivrem_words(A, B)
            elif op == "bvsrem":
                _, bits = self.sdivrem_words(A, B)
            else:
                raise ValueError(f"blast: unknown bv op {op}")
        self._bv[t.tid] = bits
        return bits

    def bool_lit(self, t: Term) -> int:
        hit = self._bool.get(t.tid)
        if hit is not None:
            return hit
        op = t.op
        if op == "true":
            lit = self.T
        elif op == "false":
            lit = self.F
        elif op == "not":
            lit = self.bool_lit(t.args[0]) ^ 1
        elif op == "and":
            lit = self.T
            for a in t.args:
                lit = self.and2(lit, self.bool_lit(a))
        elif op == "or":
            lit = self.F
            for a in t.args:
                lit = self.or2(lit, self.bool_lit(a))
        elif op == "=":
            if t.args[0].sort == BOOL:
                lit = self.xor2(self.bool_lit(t.args[0]), self.bool_lit(t.args[1])) ^ 1
            else:
                lit = self.eq_words(self.bv_bits(t.args[0]), self.bv_bits(t.args[1]))
        elif op == "bvult":
            lit = self.ult_words(self.bv_bits(t.args[0]), self.bv_bits(t.args[1]))
        elif op == "bvule":
            lit = self.ule_words(self.bv_bits(t.args[0]), self.bv_bits(t.args[1]))
        elif op == "bvslt":
            lit = self.slt_words(self.bv_bits(t.args[0]), self.bv_bits(t.args[1]))
        elif op == "bvsle":
            lit = self.slt_words(self.bv_bits(t.args[1]), self.bv_bits(t.args[0])) ^ 1
        elif op == "ite":
            lit = self.mux(self.bool_lit(t.args[0]), self.bool_lit(t.args[1]),
                           self.bool_lit(t.args[2]))
        else:
            raise ValueError(f"blast: unknown bool op {op}")
        self._bool[t.tid] = lit
        return lit

    def assert_formula(self, t: Term):
        if t.op == "and":
            for a in t.args:
                self.assert_formula(a)
            return
        if t.op == "or":
            self.sat.add_clause([self.bool_lit(a) for a in t.args])
            return
        self.sat.add_clause([self.bool_lit(t)])

    def model_word(self, name: str) -> int:
        bits = self.var_bits.get(name)
        if bits is None:
            return 0
        val = 0
        for i, lit in enumerate(bits):
            if lit == self.T:
                b = 1
            elif lit == self.F:
                b = 0
            else:
                b = 1 if self.sat.litval[lit] == 1 else 0
            if b:
                val |= 1 << i
        return val


def inline_definitions(conjuncts: list[Term]) -> tuple[list[Term], dict[str, Term]]:
    """Pull ``var = term`` conjuncts into a substitution (SSA definitions),
    returning the remaining conjuncts fully substituted.

    Path formulas are mostly functional SSA definitions; inlining them keeps
    the CNF tiny and makes concrete-heavy queries near-trivial.
    """
    bindings: dict[Term, Term] = {}

    def resolve(t: Term) -> Term:
        while True:
            t2 = terms.substitute(t, bindings)
            if t2 is t:
                return t
            t = t2

    kept: list[Term] = []
    for c in conjuncts:
        c = resolve(c)
        if c.op == "=" and c.args and c.args[0].sort != BOOL:
            a, b = c.args
            if b.op == "var" and a.op != "var":
                a, b = b, a
            if a.op == "var" and a not in bindings:
                rhs = resolve(b)
                if all(v is not a for v in terms.collect_vars(rhs)):
                    bindings[a] = rhs
                    continue
        kept.append(c)
    resolved = [resolve(c) for c in kept]
    return resolved, {v.attr: resolve(rhs) for v, rhs in bindings.items()}
