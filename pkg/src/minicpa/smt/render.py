"""Deterministic SMT-LIB2 v2.6 rendering of terms and whole queries."""

from __future__ import annotations

from minicpa.smt import terms
from minicpa.smt.terms import BOOL, Term

_OPNAMES = {
    "bvadd": "bvadd", "bvsub": "bvsub", "bvmul": "bvmul", "bvneg": "bvneg",
    "bvudiv": "bvudiv", "bvsdiv": "bvsdiv", "bvurem": "bvurem",
    "bvsrem": "bvsrem", "bvand": "bvand", "bvor": "bvor", "bvxor": "bvxor",
    "bvnot": "bvnot", "bvshl": "bvshl", "bvlshr": "bvlshr", "bvashr": "bvashr",
    "=": "=", "bvult": "bvult", "bvule": "bvule", "bvslt": "bvslt",
    "bvsle": "bvsle", "not": "not", "and": "and", "or": "or", "ite": "ite",
}

_PLAIN = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789~!@$%^&*_-+=<>.?/")


def smt_symbol(name: str) -> str:
    """Quote a symbol if it is not a simple SMT-LIB symbol."""
    if name and all(c in _PLAIN for c in name) and not name[0].isdigit():
        return name
    return f"|{name}|"


def render_sort(sort) -> str:
    if sort == BOOL:
        return "Bool"
    return f"(_ BitVec {sort[1]})"


def render_term(t: Term, share: bool = True) -> str:
    """Render a term; shared compound subterms become ``let`` bindings.

    Sharing matters: symbolic-execution terms can double in size per loop
    iteration, and a plain tree printout would be exponential.
    """
    refs: dict[int, int] = {}
    order: list[Term] = []
    for node in terms.walk(t):
        order.append(node)
        for a in node.args:
            refs[a.tid] = refs.get(a.tid, 0) + 1

    bound: dict[int, str] = {}
    lets: list[tuple[str, str]] = []

    def render(node: Term, top: bool) -> str:
        name = bound.get(node.tid)
        if name is not None and not top:
            return name
        op = node.op
        if op == "const":
            return f"(_ bv{node.attr} {node.width})"
        if op == "var":
            return smt_symbol(node.attr)
        if op == "true":
            return "true"
        if op == "false":
            return "false"
        args = " ".join(render(a, False) for a in node.args)
        if op == "zero_extend":
            return f"((_ zero_extend {node.attr}) {args})"
        if op == "sign_extend":
            return f"((_ sign_extend {node.attr}) {args})"
        if op == "extract":
            hi, lo = node.attr
            return f"((_ extract {hi} {lo}) {args})"
        return f"({_OPNAMES[op]} {args})"

    if share:
        for node in order:
            if node.args and refs.get(node.tid, 0) > 1 and node is not t:
                name = f"?s{len(lets)}"
                lets.append((name, render(node, True)))
                bound[node.tid] = name

    body = render(t, True)
    for name, definition in reversed(lets):
        body = f"(let (({name} {definition})) {body})"
    return body


def render_declarations(varset) -> list[str]:
    out = []
    for v in sorted(varset, key=lambda x: x.attr):
        out.append(f"(declare-fun {smt_symbol(v.attr)} () {render_sort(v.sort)})")
    return out


def render_check(assertions, extra_vars=(), produce_models: bool = True) -> str:
    """Full query text: reset, set-logic, declarations, asserts, check-sat."""
    decls: dict[str, Term] = {}
    for a in assertions:
        for v in terms.collect_vars(a):
            decls[v.attr] = v
    for v in extra_vars:
        decls[v.attr] = v
    lines = ["(reset)"]
    if produce_models:
        lines.append("(set-option :produce-models true)")
    lines.append("(set-logic QF_BV)")
    lines.extend(render_declarations(decls.values()))
    for a in assertions:
        lines.append(f"(assert {render_term(a)})")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"
