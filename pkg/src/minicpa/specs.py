"""Specification automata: the property side of a verification task.

A specification is a small observer automaton over CFA edges.  It starts in
its initial state, follows the first matching trigger on every edge the
analysis explores, and flags a property violation by entering the
distinguished ``ERROR`` state (a sink).  The bundled automata live in
``config/specification/*.spc`` and are parsed with the same grammar as
user-supplied files.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from minicpa import log
from minicpa.cfa.model import CallEdge, Edge, ExternalCallEdge, LabelEdge, NondetEdge
from minicpa.errors import SpecSyntaxError, UnknownSpecification

ERROR_STATE = "ERROR"

#: Specification names that exist in the wider tool family but are not
#: supported here; they get a dedicated error message instead of a generic
#: "unknown specification".
OUT_OF_SCOPE = {
    "memorysafety": "memory safety checking (heap analysis) is out of scope",
    "memorycleanup": "memory cleanup checking (heap analysis) is out of scope",
    "datarace": "data race checking (concurrency analysis) is out of scope",
    "termination-as-lasso": "lasso-based termination analysis is out of scope",
}

BUILTIN_NAMES = ("default", "Assertion", "ErrorLabel", "overflow",
                 "termination", "unreach-call")


# --------------------------------------------------------------------------
# triggers


@dataclass(frozen=True)
class MatchCall:
    """Matches any call edge to the named function, whatever the arguments."""

    callee: str

    def matches(self, edge: Edge) -> bool:
        return (isinstance(edge, (CallEdge, ExternalCallEdge, NondetEdge))
                and edge.callee == self.callee)


@dataclass(frozen=True)
class MatchLabel:
    """Matches label edges, comparing names case-insensitively."""

    label: str

    def matches(self, edge: Edge) -> bool:
        return (isinstance(edge, LabelEdge)
                and edge.name.casefold() == self.label.casefold())


@dataclass(frozen=True)
class MatchLocation:
    """Matches edges entering a location of the given kind.

    The kinds in question (``overflow_error``, ``nonterm_error``) only exist
    in instrumented CFAs; on a plain CFA this trigger never fires.
    """

    kind: str

    def matches(self, edge: Edge) -> bool:
        return edge.dst.kind == self.kind


@dataclass(frozen=True)
class MatchEdgeId:
    """Matches one specific CFA edge.  Built programmatically (coverage
    goals, witness waypoints); not expressible in the textual grammar."""

    edge_id: int

    def matches(self, edge: Edge) -> bool:
        return edge.edge_id == self.edge_id


@dataclass(frozen=True)
class Otherwise:
    def matches(self, edge: Edge) -> bool:
        return True


@dataclass(frozen=True)
class Transition:
    source: str
    trigger: object
    target: str  # state name, or ERROR_STATE
    message: str | None = None


@dataclass(frozen=True)
class SpecAutomaton:
    name: str
    initial: str
    states: tuple[str, ...]
    transitions: tuple[Transition, ...]
    _by_source: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        by_source: dict[str, list[Transition]] = {s: [] for s in self.states}
        for t in self.transitions:
            if t.source not in by_source:
                raise SpecSyntaxError(
                    f"automaton {self.name}: transition from undeclared "
                    f"state '{t.source}'")
            if t.target != ERROR_STATE and t.target not in by_source:
                raise SpecSyntaxError(
                    f"automaton {self.name}: transition to undeclared "
                    f"state '{t.target}'")
            by_source[t.source].append(t)
        if self.initial not in by_source:
            raise SpecSyntaxError(
                f"automaton {self.name}: initial state '{self.initial}' "
                f"is not declared")
        object.__setattr__(self, "_by_source", by_source)
        for s in [s for s in self.states if s not in self._reachable()]:
            log.emit(f"State {s} is unreachable in automaton {self.name}",
                     "SpecificationParser.parse", "WARNING")

    def _reachable(self) -> set[str]:
        seen = {self.initial}
        work = [self.initial]
        while work:
            for t in self._by_source[work.pop()]:
                if t.target != ERROR_STATE and t.target not in seen:
                    seen.add(t.target)
                    work.append(t.target)
        return seen

    def transitions_from(self, state: str) -> list[Transition]:
        return self._by_source.get(state, [])


@dataclass(frozen=True)
class SpecState:
    """Current automaton state; `message` is set once ERROR is reached."""

    current: str
    message: str | None = None

    @property
    def is_error(self) -> bool:
        return self.current == ERROR_STATE


def initial_state(automaton: SpecAutomaton) -> SpecState:
    return SpecState(automaton.initial)


def spec_transfer(automaton: SpecAutomaton, state: SpecState,
                  edge: Edge) -> SpecState:
    """Advance the automaton over one edge: first matching trigger wins,
    no match keeps the current state, ERROR is absorbing."""
    if state.is_error:
        return state
    for t in automaton.transitions_from(state.current):
        if t.trigger.matches(edge):
            if t.target == ERROR_STATE:
                return SpecState(ERROR_STATE, t.message)
            return SpecState(t.target)
    return state


# --------------------------------------------------------------------------
# the textual grammar


_PUNCT = ("->", ";", ":", "(", ")")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    """Yield (kind, text, line) with kind ∈ {ident, string, punct}."""
    tokens = []
    i, line = 0, 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            i += 1
            continue
        if c.isspace():
            i += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if c == '"':
            j = text.find('"', i + 1)
            if j < 0:
                raise SpecSyntaxError("unterminated string", f"line {line}")
            tokens.append(("string", text[i + 1:j], line))
            i = j + 1
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                tokens.append(("punct", p, line))
                i += len(p)
                break
        else:
            if c.isalpha() or c == "_":
                j = i
                while j < n and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                tokens.append(("ident", text[i:j], line))
                i = j
            else:
                raise SpecSyntaxError(f"unexpected character {c!r}",
                                      f"line {line}")
    return tokens


class _SpecParser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def _peek(self):
        if self.i < len(self.tokens):
            return self.tokens[self.i]
        return ("eof", "", self.tokens[-1][2] if self.tokens else 1)

    def _next(self):
        tok = self._peek()
        self.i += 1
        return tok

    def _expect(self, text: str):
        kind, tok, line = self._next()
        if tok != text:
            raise SpecSyntaxError(f"expected '{text}', found '{tok or 'end of file'}'",
                                  f"line {line}")

    def _ident(self, what: str) -> str:
        kind, tok, line = self._next()
        if kind != "ident":
            raise SpecSyntaxError(f"expected {what}, found '{tok or 'end of file'}'",
                                  f"line {line}")
        return tok

    def _string(self, what: str) -> str:
        kind, tok, line = self._next()
        if kind != "string":
            raise SpecSyntaxError(f"expected {what} in double quotes",
                                  f"line {line}")
        return tok

    def parse(self) -> SpecAutomaton:
        self._expect("AUTOMATON")
        name = self._ident("automaton name")
        self._expect("INITIAL")
        self._expect("STATE")
        initial = self._ident("state name")
        self._expect(";")
        states: list[str] = []
        transitions: list[Transition] = []
        while self._peek()[1] == "STATE":
            self._next()
            state = self._ident("state name")
            if state == ERROR_STATE:
                raise SpecSyntaxError("'ERROR' is reserved and cannot be "
                                      "declared as a state")
            if state in states:
                raise SpecSyntaxError(f"duplicate state '{state}'")
            states.append(state)
            self._expect(":")
            while self._peek()[1] in ("MATCH", "OTHERWISE"):
                transitions.append(self._transition(state))
        self._expect("END")
        if self._peek()[0] != "eof":
            raise SpecSyntaxError("trailing input after END",
                                  f"line {self._peek()[2]}")
        return SpecAutomaton(name, initial, tuple(states), tuple(transitions))

    def _transition(self, source: str) -> Transition:
        kind, tok, line = self._next()
        if tok == "OTHERWISE":
            trigger = Otherwise()
        else:
            what = self._ident("trigger kind")
            if what == "CALL":
                trigger = MatchCall(self._string("a function name"))
            elif what == "LABEL":
                trigger = MatchLabel(self._string("a label name"))
            elif what == "LOCATION":
                trigger = MatchLocation(self._ident("a location kind").lower())
            else:
                raise SpecSyntaxError(
                    f"unknown trigger 'MATCH {what}' (expected CALL, LABEL, "
                    f"or LOCATION)", f"line {line}")
        self._expect("->")
        kind, tok, line = self._next()
        if tok == ERROR_STATE:
            self._expect("(")
            message = self._string("an error message")
            self._expect(")")
            target = ERROR_STATE
        elif tok == "STATE":
            target = self._ident("state name")
            message = None
        else:
            raise SpecSyntaxError(
                f"expected ERROR(\"...\") or STATE <name>, found '{tok}'",
                f"line {line}")
        self._expect(";")
        return Transition(source, trigger, target, message)


def parse_automaton(text: str) -> SpecAutomaton:
    return _SpecParser(text).parse()


# --------------------------------------------------------------------------
# bundled specifications and .prp property files


def _bundled(name: str) -> SpecAutomaton:
    ref = resources.files("minicpa").joinpath(f"config/specification/{name}.spc")
    return parse_automaton(ref.read_text(encoding="utf-8"))


def builtin_spec(name: str) -> SpecAutomaton:
    if name in OUT_OF_SCOPE:
        raise UnknownSpecification(
            f"specification '{name}' is not supported: {OUT_OF_SCOPE[name]}")
    if name not in BUILTIN_NAMES:
        raise UnknownSpecification(f"unknown specification '{name}'")
    return _bundled(name)


def _spec_for_property(path: Path) -> SpecAutomaton:
    """Map an SV-COMP .prp property file onto a bundled automaton."""
    text = ""
    if path.exists():
        text = path.read_text(encoding="utf-8")
    blob = f"{path.name} {text}"
    if "unreach-call" in blob or "reach_error" in blob:
        return builtin_spec("unreach-call")
    if "no-overflow" in blob or "overflow" in blob:
        return builtin_spec("overflow")
    if "termination" in blob:
        return builtin_spec("termination")
    if "valid-memsafety" in blob or "valid-memcleanup" in blob:
        raise UnknownSpecification(
            f"property file '{path.name}' requires memory safety checking, "
            f"which is out of scope")
    raise UnknownSpecification(
        f"cannot map property file '{path.name}' to a supported specification")


def load_spec(name_or_path: str) -> SpecAutomaton:
    """Resolve a --spec argument: a bundled name, an .spc file, or a .prp
    property file."""
    if name_or_path.endswith(".prp"):
        return _spec_for_property(Path(name_or_path))
    if name_or_path.endswith(".spc"):
        p = Path(name_or_path)
        if p.exists():
            return parse_automaton(p.read_text(encoding="utf-8"))
        stem = p.stem
        if stem in BUILTIN_NAMES or stem in OUT_OF_SCOPE:
            return builtin_spec(stem)
        raise UnknownSpecification(f"specification file '{name_or_path}' not found")
    return builtin_spec(name_or_path)
