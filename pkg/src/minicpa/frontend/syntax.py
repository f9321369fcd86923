"""AST node definitions and the source printer for the mini-C subset.

Types are the strings ``"int"`` / ``"uint"`` (both 32-bit, ILP32) plus
``"void"`` for function returns.  The type checker fills in ``ctype`` on
expressions; comparison/logical results are ``int`` like in C.
"""

from __future__ import annotations

from dataclasses import dataclass, field

INT, UINT, VOID = "int", "uint", "void"


@dataclass(frozen=True)
class Pos:
    file: str
    line: int
    col: int

    def __str__(self):
        return f"{self.file}:{self.line}:{self.col}"


# -- expressions --------------------------------------------------------------


@dataclass
class Expr:
    pos: Pos | None = field(default=None, repr=False, compare=False)
    ctype: str | None = field(default=None, repr=False, compare=False)


@dataclass
class IntLit(Expr):
    value: int = 0
    unsigned_suffix: bool = False


@dataclass
class VarRef(Expr):
    name: str = ""


@dataclass
class Unary(Expr):
    op: str = ""  # '-' '~' '!'
    operand: Expr | None = None


@dataclass
class Binary(Expr):
    op: str = ""  # + - * / % << >> & | ^ == != < <= > >= && ||
    left: Expr | None = None
    right: Expr | None = None
    # for comparisons: the common operand type deciding signedness
    cmp_type: str | None = field(default=None, repr=False, compare=False)


@dataclass
class Cast(Expr):
    target: str = ""
    operand: Expr | None = None


@dataclass
class Call(Expr):
    name: str = ""
    args: list = field(default_factory=list)


@dataclass
class OverflowCheck(Expr):
    """Internal node produced by overflow instrumentation, never parsed.

    True iff ``left op right`` (or ``op left`` for unary minus) overflows the
    32-bit range of the checked signedness, judged in exact integer
    arithmetic.
    """

    op: str = ""  # '+', '-', '*', '/', 'neg'
    left: Expr | None = None
    right: Expr | None = None
    signed: bool = True


ARITH_OPS = {"+", "-", "*", "/", "%"}
BIT_OPS = {"&", "|", "^"}
SHIFT_OPS = {"<<", ">>"}
CMP_OPS = {"==", "!=", "<", "<=", ">", ">="}
LOGIC_OPS = {"&&", "||"}


# -- statements ---------------------------------------------------------------


@dataclass
class Stmt:
    pos: Pos | None = field(default=None, repr=False, compare=False)


@dataclass
class Decl(Stmt):
    ctype: str = INT
    name: str = ""
    init: Expr | None = None


@dataclass
class Assign(Stmt):
    name: str = ""
    expr: Expr | None = None


@dataclass
class ExprStmt(Stmt):
    expr: Expr | None = None  # only calls are allowed here


@dataclass
class If(Stmt):
    cond: Expr | None = None
    then: list = field(default_factory=list)
    els: list | None = None


@dataclass
class While(Stmt):
    cond: Expr | None = None
    body: list = field(default_factory=list)


@dataclass
class LabelStmt(Stmt):
    name: str = ""


@dataclass
class Goto(Stmt):
    label: str = ""


@dataclass
class Return(Stmt):
    expr: Expr | None = None


# -- top level ----------------------------------------------------------------


@dataclass
class Param:
    ctype: str
    name: str


@dataclass
class FunctionDef:
    name: str
    ret_type: str
    params: list
    body: list
    pos: Pos | None = field(default=None, repr=False, compare=False)


@dataclass
class ExternDecl:
    name: str
    ret_type: str
    params: list | None  # None: unknown ()
    pos: Pos | None = field(default=None, repr=False, compare=False)


@dataclass
class Program:
    functions: list
    externs: list
    file: str = "<input>"

    def function(self, name: str) -> FunctionDef | None:
        for f in self.functions:
            if f.name == name:
                return f
        return None


# -- printer ------------------------------------------------------------------

_PRECEDENCE = {
    "||": 1, "&&": 2, "|": 3, "^": 4, "&": 5, "==": 6, "!=": 6,
    "<": 7, "<=": 7, ">": 7, ">=": 7, "<<": 8, ">>": 8,
    "+": 9, "-": 9, "*": 10, "/": 10, "%": 10,
}

_UNARY_PREC = 11


def free_variables(e: Expr | None) -> set[str]:
    """Qualified names of all variables read by *e*."""
    out: set[str] = set()

    def walk(node):
        if node is None:
            return
        if isinstance(node, VarRef):
            out.add(node.name)
        elif isinstance(node, (Unary, Cast)):
            walk(node.operand)
        elif isinstance(node, (Binary, OverflowCheck)):
            walk(node.left)
            walk(node.right)
        elif isinstance(node, Call):
            for arg in node.args:
                walk(arg)

    walk(e)
    return out


def type_source(ctype: str) -> str:
    return {INT: "int", UINT: "unsigned int", VOID: "void"}[ctype]


def expr_source(e: Expr, parent_prec: int = 0) -> str:
    if isinstance(e, IntLit):
        if e.unsigned_suffix or (e.ctype == UINT and e.value > 0x7FFFFFFF):
            return f"{e.value}U"
        return str(e.value)
    if isinstance(e, VarRef):
        return e.name
    if isinstance(e, Unary):
        inner = expr_source(e.operand, _UNARY_PREC)
        if e.op == "-" and inner.startswith("-"):
            inner = f"({inner})"  # avoid lexing '--x' as a decrement
        text = f"{e.op}{inner}"
        return f"({text})" if parent_prec > _UNARY_PREC else text
    if isinstance(e, Cast):
        inner = expr_source(e.operand, _UNARY_PREC)
        text = f"({type_source(e.target)}){inner}"
        return f"({text})" if parent_prec > _UNARY_PREC else text
    if isinstance(e, Binary):
        prec = _PRECEDENCE[e.op]
        left = expr_source(e.left, prec)
        right = expr_source(e.right, prec + 1)  # left-assoc
        text = f"{left} {e.op} {right}"
        return f"({text})" if parent_prec > prec else text
    if isinstance(e, Call):
        args = ", ".join(expr_source(a) for a in e.args)
        return f"{e.name}({args})"
    if isinstance(e, OverflowCheck):
        kind = "signed" if e.signed else "unsigned"
        if e.right is None:
            return f"__builtin_overflow_{kind}_neg({expr_source(e.left)})"
        return (f"__builtin_overflow_{kind}('{e.op}', {expr_source(e.left)}, "
                f"{expr_source(e.right)})")
    raise TypeError(f"cannot print {e!r}")


def _stmt_lines(stmt: Stmt, indent: str) -> list[str]:
    if isinstance(stmt, Decl):
        init = f" = {expr_source(stmt.init)}" if stmt.init is not None else ""
        return [f"{indent}{type_source(stmt.ctype)} {stmt.name}{init};"]
    if isinstance(stmt, Assign):
        return [f"{indent}{stmt.name} = {expr_source(stmt.expr)};"]
    if isinstance(stmt, ExprStmt):
        return [f"{indent}{expr_source(stmt.expr)};"]
    if isinstance(stmt, If):
        out = [f"{indent}if ({expr_source(stmt.cond)}) {{"]
        for s in stmt.then:
            out.extend(_stmt_lines(s, indent + "  "))
        if stmt.els is not None:
            out.append(f"{indent}}} else {{")
            for s in stmt.els:
                out.extend(_stmt_lines(s, indent + "  "))
        out.append(f"{indent}}}")
        return out
    if isinstance(stmt, While):
        out = [f"{indent}while ({expr_source(stmt.cond)}) {{"]
        for s in stmt.body:
            out.extend(_stmt_lines(s, indent + "  "))
        out.append(f"{indent}}}")
        return out
    if isinstance(stmt, LabelStmt):
        return [f"{stmt.name}:;"]
    if isinstance(stmt, Goto):
        return [f"{indent}goto {stmt.label};"]
    if isinstance(stmt, Return):
        if stmt.expr is None:
            return [f"{indent}return;"]
        return [f"{indent}return {expr_source(stmt.expr)};"]
    raise TypeError(f"cannot print {stmt!r}")


def program_source(prog: Program) -> str:
    """Print a parseable C source for the program (used for round-trips)."""
    lines: list[str] = []
    for ext in prog.externs:
        params = "" if ext.params is None else ", ".join(
            type_source(p.ctype) for p in ext.params)
        lines.append(f"extern {type_source(ext.ret_type)} {ext.name}({params});")
    for fn in prog.functions:
        params = ", ".join(f"{type_source(p.ctype)} {p.name}" for p in fn.params)
        lines.append(f"{type_source(fn.ret_type)} {fn.name}({params}) {{")
        for s in fn.body:
            lines.extend(_stmt_lines(s, "  "))
        lines.append("}")
    return "\n".join(lines) + "\n"
