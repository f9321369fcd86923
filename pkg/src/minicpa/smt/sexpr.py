"""Minimal SMT-LIB2 s-expression tokenizer and reader.

Atoms are kept as raw strings (numerals included); interpretation is up to
the consumer.  Quoted symbols ``|...|`` keep their bars stripped but are
marked by the fact that they may contain special characters.
"""

from __future__ import annotations


class SexprError(Exception):
    pass


def tokenize(text: str):
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in " \t\r\n":
            i += 1
            continue
        if c == ";":  # comment to end of line
            j = text.find("\n", i)
            i = n if j < 0 else j + 1
            continue
        if c in "()":
            yield c
            i += 1
            continue
        if c == "|":
            j = text.find("|", i + 1)
            if j < 0:
                raise SexprError("unterminated quoted symbol")
            yield text[i + 1 : j]
            i = j + 1
            continue
        if c == '"':
            j = i + 1
            while j < n:
                if text[j] == '"':
                    if j + 1 < n and text[j + 1] == '"':
                        j += 2
                        continue
                    break
                j += 1
            if j >= n:
                raise SexprError("unterminated string literal")
            yield text[i : j + 1]
            i = j + 1
            continue
        j = i
        while j < n and text[j] not in " \t\r\n()|;":
            j += 1
        yield text[i:j]
        i = j


def parse_all(text: str) -> list:
    """Parse a string into a list of top-level s-expressions."""
    stack: list[list] = []
    top: list = []
    for tok in tokenize(text):
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if not stack:
                raise SexprError("unbalanced ')'")
            done = stack.pop()
            (stack[-1] if stack else top).append(done)
        else:
            (stack[-1] if stack else top).append(tok)
    if stack:
        raise SexprError("unbalanced '('")
    return top


def parse_one(text: str):
    exprs = parse_all(text)
    if len(exprs) != 1:
        raise SexprError(f"expected one s-expression, got {len(exprs)}")
    return exprs[0]


def unparse(e) -> str:
    if isinstance(e, list):
        return "(" + " ".join(unparse(x) for x in e) + ")"
    return str(e)


class StreamReader:
    """Incremental reader: feed text chunks, pop complete top-level exprs.

    The bundled solver reads commands from stdin with this; a command may
    span lines and a line may hold several commands.
    """

    def __init__(self):
        self._depth = 0
        self._buf: list[str] = []
        self._ready: list = []
        self._partial = ""

    def feed(self, chunk: str):
        text = self._partial + chunk
        # Only tokenize up to the last position we can safely interpret
        # (no dangling quoted symbol / string).  Simple approach: try to
        # tokenize the whole thing; on an unterminated token, buffer it.
        try:
            toks = list(tokenize(text))
            self._partial = ""
        except SexprError:
            # keep everything after the last newline as partial
            cut = text.rfind("\n")
            if cut < 0:
                self._partial = text
                return
            self._partial = text[cut + 1 :]
            toks = list(tokenize(text[: cut + 1]))
        for tok in toks:
            if tok == "(":
                self._buf.append(tok)
                self._depth += 1
            elif tok == ")":
                self._buf.append(tok)
                self._depth -= 1
                if self._depth < 0:
                    raise SexprError("unbalanced ')'")
                if self._depth == 0:
                    self._flush()
            else:
                self._buf.append(tok)
                if self._depth == 0:
                    self._flush()

    def _flush(self):
        text_toks = self._buf
        self._buf = []
        expr = _from_tokens(text_toks)
        self._ready.append(expr)

    def pop(self):
        if self._ready:
            return self._ready.pop(0)
        return None


def _from_tokens(toks: list):
    stack: list[list] = []
    for tok in toks:
        if tok == "(":
            stack.append([])
        elif tok == ")":
            done = stack.pop()
            if stack:
                stack[-1].append(done)
            else:
                return done
        else:
            if stack:
                stack[-1].append(tok)
            else:
                return tok
    raise SexprError("incomplete s-expression")
