"""Recursive-descent parser for the mini-C subset.

Assignments are statements, not expressions; ``x += e``, ``x++`` and friends
are desugared to plain assignments during parsing, and bare ``{}`` blocks are
flattened into the enclosing statement list (declarations are
function-scoped).
"""

from __future__ import annotations

from minicpa.errors import MiniCSyntaxError, UnsupportedFeature
from minicpa.frontend.lexer import Token, tokenize
from minicpa.frontend import syntax
from minicpa.frontend.syntax import (
    Assign, Binary, Call, Cast, Decl, ExprStmt, ExternDecl, FunctionDef,
    Goto, If, IntLit, LabelStmt, Param, Program, Return, Unary, VarRef,
    While,
)

_COMPOUND_ASSIGN = {
    "+=": "+", "-=": "-", "*=": "*", "/=": "/", "%=": "%",
    "&=": "&", "|=": "|", "^=": "^", "<<=": "<<", ">>=": ">>",
}

_TYPE_STARTERS = {"int", "unsigned", "void", "signed"}


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    # -- token plumbing --------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        j = min(self.i + k, len(self.tokens) - 1)
        return self.tokens[j]

    def next(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.i += 1
        return t

    def at(self, text: str) -> bool:
        return self.tok.kind in ("punct", "keyword") and self.tok.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.next()
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise MiniCSyntaxError(
                f"expected '{text}', found '{self.tok.text or 'end of input'}'",
                self.tok.pos)
        return self.next()

    def expect_ident(self) -> Token:
        if self.tok.kind != "ident":
            raise MiniCSyntaxError(
                f"expected identifier, found '{self.tok.text or 'end of input'}'",
                self.tok.pos)
        return self.next()

    # -- types -----------------------------------------------------------

    def at_type(self) -> bool:
        return self.tok.kind == "keyword" and self.tok.text in _TYPE_STARTERS

    def parse_type(self) -> str:
        t = self.next()
        if t.text == "void":
            ctype = syntax.VOID
        elif t.text == "int":
            ctype = syntax.INT
        elif t.text == "unsigned":
            self.accept("int")
            ctype = syntax.UINT
        elif t.text == "signed":
            self.accept("int")
            ctype = syntax.INT
        else:
            raise MiniCSyntaxError(f"expected type, found '{t.text}'", t.pos)
        if self.at("*"):
            raise UnsupportedFeature("pointers", self.tok.pos)
        return ctype

    # -- top level ---------------------------------------------------------

    def parse_program(self, filename: str) -> Program:
        functions: list[FunctionDef] = []
        externs: list[ExternDecl] = []
        while self.tok.kind != "eof":
            is_extern = self.accept("extern")
            if not self.at_type():
                raise MiniCSyntaxError(
                    f"expected declaration, found '{self.tok.text}'",
                    self.tok.pos)
            start = self.tok.pos
            ret_type = self.parse_type()
            name = self.expect_ident()
            self.expect("(")
            params = self.parse_params()
            self.expect(")")
            if self.accept(";"):
                externs.append(ExternDecl(name.text, ret_type, params, start))
                continue
            if is_extern:
                raise MiniCSyntaxError(
                    "extern function cannot have a body", start)
            self.expect("{")
            body = self.parse_block()
            functions.append(
                FunctionDef(name.text, ret_type, params or [], body, start))
        return Program(functions, externs, filename)

    def parse_params(self) -> list[Param] | None:
        if self.at(")"):
            return None  # ()
        if self.at("void") and self.peek().text == ")":
            self.next()
            return []
        params = []
        while True:
            ctype = self.parse_type()
            pname = ""
            if self.tok.kind == "ident":
                pname = self.next().text
            params.append(Param(ctype, pname))
            if not self.accept(","):
                return params

    # -- statements --------------------------------------------------------

    def parse_block(self) -> list:
        stmts: list = []
        while not self.accept("}"):
            if self.tok.kind == "eof":
                raise MiniCSyntaxError("unexpected end of input, expected '}'",
                                       self.tok.pos)
            self.parse_stmt_into(stmts)
        return stmts

    def parse_stmt_into(self, out: list):
        """Parse one statement, appending the resulting statements to *out*.

        A statement can expand to several AST statements (labels attach to
        the following statement; bare blocks are flattened).
        """
        t = self.tok

        if self.accept(";"):
            return

        if self.accept("{"):
            out.extend(self.parse_block())
            return

        if self.at_type():
            ctype = self.parse_type()
            if ctype == syntax.VOID:
                raise MiniCSyntaxError("cannot declare a void variable", t.pos)
            while True:
                name = self.expect_ident()
                init = self.parse_expr() if self.accept("=") else None
                out.append(Decl(t.pos, ctype, name.text, init))
                if not self.accept(","):
                    break
            self.expect(";")
            return

        if self.accept("if"):
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            then: list = []
            self.parse_stmt_into(then)
            els = None
            if self.accept("else"):
                els = []
                self.parse_stmt_into(els)
            out.append(If(t.pos, cond, then, els))
            return

        if self.accept("while"):
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            body: list = []
            self.parse_stmt_into(body)
            out.append(While(t.pos, cond, body))
            return

        if self.accept("return"):
            expr = None if self.at(";") else self.parse_expr()
            self.expect(";")
            out.append(Return(t.pos, expr))
            return

        if self.accept("goto"):
            label = self.expect_ident()
            self.expect(";")
            out.append(Goto(t.pos, label.text))
            return

        if t.kind == "ident" and self.peek().text == ":":
            self.next()
            self.next()
            out.append(LabelStmt(t.pos, t.text))
            return

        # ++x; / --x;
        if self.at("++") or self.at("--"):
            op = self.next().text[0]
            name = self.expect_ident()
            self.expect(";")
            out.append(self._incdec(t, name.text, op))
            return

        if t.kind == "ident":
            after = self.peek()
            if after.text == "=":
                self.next()
                self.next()
                expr = self.parse_expr()
                self.expect(";")
                out.append(Assign(t.pos, t.text, expr))
                return
            if after.text in _COMPOUND_ASSIGN:
                self.next()
                self.next()
                rhs = self.parse_expr()
                self.expect(";")
                op = _COMPOUND_ASSIGN[after.text]
                lhs = VarRef(t.pos, None, t.text)
                out.append(Assign(t.pos, t.text, Binary(t.pos, None, op, lhs, rhs)))
                return
            if after.text in ("++", "--"):
                self.next()
                op = self.next().text[0]
                self.expect(";")
                out.append(self._incdec(t, t.text, op))
                return

        # expression statement — the type checker restricts these to calls
        expr = self.parse_expr()
        self.expect(";")
        out.append(ExprStmt(t.pos, expr))

    def _incdec(self, t: Token, name: str, op: str) -> Assign:
        one = IntLit(t.pos, None, 1)
        return Assign(t.pos, name,
                      Binary(t.pos, None, op, VarRef(t.pos, None, name), one))

    # -- expressions -------------------------------------------------------

    def parse_expr(self) -> syntax.Expr:
        expr = self._binary(0)
        if self.tok.text == "=" or self.tok.text in _COMPOUND_ASSIGN:
            raise UnsupportedFeature("assignment inside expressions",
                                     self.tok.pos)
        return expr

    _LEVELS = [
        {"||"}, {"&&"}, {"|"}, {"^"}, {"&"},
        {"==", "!="}, {"<", "<=", ">", ">="},
        {"<<", ">>"}, {"+", "-"}, {"*", "/", "%"},
    ]

    def _binary(self, level: int) -> syntax.Expr:
        if level == len(self._LEVELS):
            return self._unary()
        ops = self._LEVELS[level]
        expr = self._binary(level + 1)
        while self.tok.kind == "punct" and self.tok.text in ops:
            t = self.next()
            rhs = self._binary(level + 1)
            expr = Binary(t.pos, None, t.text, expr, rhs)
        return expr

    def _unary(self) -> syntax.Expr:
        t = self.tok
        if self.at("-") or self.at("~") or self.at("!"):
            self.next()
            return Unary(t.pos, None, t.text, self._unary())
        if self.at("+"):
            self.next()
            return self._unary()
        if self.at("++") or self.at("--"):
            raise UnsupportedFeature("'++'/'--' inside expressions", t.pos)
        if self.at("(") and self.peek().kind == "keyword" \
                and self.peek().text in _TYPE_STARTERS:
            self.next()
            target = self.parse_type()
            if target == syntax.VOID:
                raise UnsupportedFeature("casts to void", t.pos)
            self.expect(")")
            return Cast(t.pos, None, target, self._unary())
        expr = self._primary()
        if self.at("++") or self.at("--"):
            raise UnsupportedFeature("'++'/'--' inside expressions",
                                     self.tok.pos)
        return expr

    def _primary(self) -> syntax.Expr:
        t = self.tok
        if self.accept("("):
            expr = self.parse_expr()
            self.expect(")")
            return expr
        if t.kind == "number":
            self.next()
            return IntLit(t.pos, None, t.value, t.unsigned_suffix)
        if t.kind == "ident":
            self.next()
            if self.accept("("):
                args = []
                if not self.at(")"):
                    while True:
                        args.append(self.parse_expr())
                        if not self.accept(","):
                            break
                self.expect(")")
                return Call(t.pos, None, t.text, args)
            return VarRef(t.pos, None, t.text)
        if t.kind == "punct" and t.text == "*":
            raise UnsupportedFeature("pointers", t.pos)
        raise MiniCSyntaxError(
            f"expected expression, found '{t.text or 'end of input'}'", t.pos)


def parse_program(source: str, filename: str = "<input>") -> Program:
    """Parse a translation unit (no preprocessing; ``#`` lines are rejected)."""
    return _Parser(tokenize(source, filename)).parse_program(filename)


def parse_expression(source: str, filename: str = "<expr>") -> syntax.Expr:
    """Parse a single C expression, e.g. a witness assumption or invariant."""
    parser = _Parser(tokenize(source, filename))
    expr = parser.parse_expr()
    if parser.tok.kind != "eof":
        raise MiniCSyntaxError(
            f"unexpected '{parser.tok.text}' after expression", parser.tok.pos)
    return expr
