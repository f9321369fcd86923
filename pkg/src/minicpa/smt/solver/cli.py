"""SMT-LIB2 command loop for the bundled solver (``minicpa-solve``).

Reads commands from stdin, answers on stdout, diagnostics on stderr.
Supported: set-logic, set-option, set-info, declare-fun/declare-const,
assert, check-sat, get-value, reset, echo, exit.  Each check-sat solves the
current assertion stack from scratch (no incrementality), which matches how
the verifier drives it: one (reset) + full query per check.
"""

from __future__ import annotations

import sys
import time

from minicpa.smt import terms
from minicpa.smt.parse import SmtParseError, parse_sort, parse_term
from minicpa.smt.render import smt_symbol
from minicpa.smt.sexpr import SexprError, StreamReader
from minicpa.smt.solver.bitblast import Blaster, inline_definitions
from minicpa.smt.solver.sat import SatSolver
from minicpa.smt.terms import BOOL


class _ModelEnv(dict):
    """Lazy model environment: unresolved names fall back to bindings/zero."""

    def __init__(self, blaster, bindings):
        super().__init__()
        self.blaster = blaster
        self.bindings = bindings
        self.resolving: set[str] = set()

    def __missing__(self, name: str) -> int:
        if name in self.resolving:
            raise SmtParseError(f"cyclic definition for {name}")
        self.resolving.add(name)
        try:
            if self.blaster is not None and name in self.blaster.var_bits:
                val = self.blaster.model_word(name)
            elif name in self.bindings:
                val = terms.eval_term(self.bindings[name], self)
                if isinstance(val, bool):
                    val = int(val)
            else:
                val = 0
        finally:
            self.resolving.discard(name)
        self[name] = val
        return val


class SolverSession:
    def __init__(self, out):
        self.out = out
        self._reset()

    def _reset(self):
        self.decls: dict[str, terms.Term] = {}
        self.assertions: list[terms.Term] = []
        self.timeout_ms: int | None = None
        self.model_env: _ModelEnv | None = None
        self.last_result: str | None = None

    def _reply(self, text: str):
        self.out.write(text + "\n")
        self.out.flush()

    def handle(self, cmd) -> bool:
        """Process one command; returns False when the session should end."""
        if not isinstance(cmd, list) or not cmd:
            self._reply('(error "expected a command")')
            return True
        head = cmd[0]
        try:
            if head == "exit":
                return False
            if head == "reset":
                self._reset()
                return True
            if head in ("set-logic", "set-info"):
                return True
            if head == "set-option":
                if len(cmd) >= 3 and cmd[1] == ":timeout":
                    self.timeout_ms = int(cmd[2])
                return True
            if head == "echo":
                self._reply(cmd[1].strip('"') if len(cmd) > 1 else "")
                return True
            if head in ("declare-fun", "declare-const"):
                name = cmd[1]
                sort_sx = cmd[3] if head == "declare-fun" else cmd[2]
                if head == "declare-fun" and cmd[2] != []:
                    raise SmtParseError("only 0-ary declare-fun supported")
                sort = parse_sort(sort_sx)
                if sort == BOOL:
                    raise SmtParseError("Bool constants not supported; use (_ BitVec 1)")
                self.decls[name] = terms.var(name, sort[1])
                return True
            if head == "assert":
                self.assertions.append(parse_term(cmd[1], self.decls))
                return True
            if head == "check-sat":
                self._reply(self._check_sat())
                return True
            if head == "get-value":
                self._reply(self._get_value(cmd[1]))
                return True
            self._reply(f'(error "unsupported command: {head}")')
            return True
        except (SmtParseError, SexprError, IndexError, ValueError) as exc:
            self._reply(f'(error "{exc}")')
            return True

    def _check_sat(self) -> str:
        conjuncts: list[terms.Term] = []
        for a in self.assertions:
            if a.op == "and":
                conjuncts.extend(a.args)
            else:
                conjuncts.append(a)
        remaining, bindings = inline_definitions(conjuncts)
        self.model_env = None
        for c in remaining:
            if c is terms.FALSE:
                self.last_result = "unsat"
                return "unsat"
        remaining = [c for c in remaining if c is not terms.TRUE]
        sat = SatSolver()
        blaster = Blaster(sat)
        for c in remaining:
            blaster.assert_formula(c)
        deadline = None
        if self.timeout_ms is not None:
            deadline = time.monotonic() + self.timeout_ms / 1000.0
        result = sat.solve(deadline=deadline)
        self.last_result = result
        if result == "sat":
            self.model_env = _ModelEnv(blaster, bindings)
        return result

    def _get_value(self, req) -> str:
        if self.model_env is None:
            return '(error "no model available")'
        parts = []
        for sym in req:
            if not isinstance(sym, str):
                return '(error "get-value supports plain symbols only")'
            val = self.model_env[sym]
            decl = self.decls.get(sym)
            width = decl.width if decl is not None else 32
            parts.append(f"({smt_symbol(sym)} (_ bv{val & ((1 << width) - 1)} {width}))")
        return "(" + " ".join(parts) + ")"


def main() -> int:
    session = SolverSession(sys.stdout)
    reader = StreamReader()
    stdin = sys.stdin
    while True:
        chunk = stdin.readline()
        if chunk == "":
            break
        try:
            reader.feed(chunk)
        except SexprError as exc:
            sys.stdout.write(f'(error "{exc}")\n')
            sys.stdout.flush()
            continue
        while True:
            cmd = reader.pop()
            if cmd is None:
                break
            if not session.handle(cmd):
                return 0
    return 0


if __name__ == "__main__":
    sys.exit(main())
