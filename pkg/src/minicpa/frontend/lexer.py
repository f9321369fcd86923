"""Tokenizer for the mini-C subset."""

from __future__ import annotations

from dataclasses import dataclass

from minicpa.errors import MiniCSyntaxError, UnsupportedFeature
from minicpa.frontend.syntax import Pos

KEYWORDS = {
    "int", "unsigned", "void", "if", "else", "while", "return", "goto",
    "extern", "signed",
}

# C keywords we recognise but do not support; naming them explicitly gives a
# far better error than a generic parse failure.
REJECTED_KEYWORDS = {
    "for", "do", "break", "continue", "switch", "case", "default", "struct",
    "union", "enum", "typedef", "static", "const", "volatile", "char",
    "short", "long", "float", "double", "sizeof", "auto", "register",
    "inline", "restrict",
}

PUNCT = [
    # longest first so maximal munch works with simple startswith checks
    "<<=", ">>=",
    "==", "!=", "<=", ">=", "&&", "||", "<<", ">>", "++", "--",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
    "(", ")", "{", "}", ";", ",", ":",
    "+", "-", "*", "/", "%", "<", ">", "=", "!", "~", "&", "|", "^",
]


@dataclass(frozen=True)
class Token:
    kind: str  # 'ident' | 'keyword' | 'number' | 'punct' | 'eof'
    text: str
    value: int | None
    unsigned_suffix: bool
    pos: Pos


def tokenize(source: str, filename: str = "<input>") -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    i, n = 0, len(source)

    def pos() -> Pos:
        return Pos(filename, line, col)

    def advance(k: int):
        nonlocal i, line, col
        for _ in range(k):
            if source[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        c = source[i]
        if c in " \t\r\n":
            advance(1)
            continue
        if c == "#":
            if col != 1:
                raise MiniCSyntaxError("stray '#' in program", pos())
            raise UnsupportedFeature("preprocessor directives", pos())
        if source.startswith("//", i):
            while i < n and source[i] != "\n":
                advance(1)
            continue
        if source.startswith("/*", i):
            start = pos()
            advance(2)
            while i < n and not source.startswith("*/", i):
                advance(1)
            if i >= n:
                raise MiniCSyntaxError("unterminated comment", start)
            advance(2)
            continue
        if c.isdigit():
            start = pos()
            j = i
            if source.startswith("0x", i) or source.startswith("0X", i):
                j = i + 2
                while j < n and source[j] in "0123456789abcdefABCDEF":
                    j += 1
                if j == i + 2:
                    raise MiniCSyntaxError("malformed hex literal", start)
                value = int(source[i:j], 16)
            else:
                while j < n and source[j].isdigit():
                    j += 1
                value = int(source[i:j])
            text = source[i:j]
            advance(j - i)
            suffix = False
            while i < n and source[i] in "uUlL":
                if source[i] in "uU":
                    suffix = True
                text += source[i]
                advance(1)
            if i < n and (source[i].isalnum() or source[i] == "_"):
                raise MiniCSyntaxError(f"malformed number '{text}'", start)
            tokens.append(Token("number", text, value, suffix, start))
            continue
        if c.isalpha() or c == "_":
            start = pos()
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            word = source[i:j]
            advance(j - i)
            if word in REJECTED_KEYWORDS:
                raise UnsupportedFeature(f"'{word}'", start)
            kind = "keyword" if word in KEYWORDS else "ident"
            tokens.append(Token(kind, word, None, False, start))
            continue
        if c in "'\"":
            raise UnsupportedFeature("string and character literals", pos())
        if c in "[]":
            raise UnsupportedFeature("arrays", pos())
        if c == "?":
            raise UnsupportedFeature("the '?:' operator", pos())
        if c == ".":
            raise UnsupportedFeature("floating-point literals and member access",
                                     pos())
        for p in PUNCT:
            if source.startswith(p, i):
                start = pos()
                advance(len(p))
                tokens.append(Token("punct", p, None, False, start))
                break
        else:
            raise MiniCSyntaxError(f"unexpected character {c!r}", pos())

    tokens.append(Token("eof", "", None, False, pos()))
    return tokens
