"""CFA construction, instrumentation, interpretation, and DOT export."""

import itertools

import pytest
from hypothesis import given, settings, strategies as st

import astexec
import corpus
from conftest import cfa_from_source, load_cfa
from minicpa.cfa import (
    AssumeEdge, CallEdge, ExternalCallEdge, LabelEdge, NondetEdge, ReturnEdge,
    ReachedTarget, StepLimitExceeded, Terminated, build_cfa, concrete_execute,
    export_dot, instrument_overflow, instrument_termination,
)
from minicpa.cfa.instrument import _liveness
from minicpa.errors import InputExhausted, NoLoops, VerifierError
from minicpa.frontend import parse_program, typecheck
from minicpa.frontend.syntax import OverflowCheck
from minicpa.specs import builtin_spec


# -- construction ------------------------------------------------------------

def test_trivial_function():
    cfa = cfa_from_source("int main() { return 0; }")
    returns = [e for e in cfa.edges if isinstance(e, ReturnEdge)]
    assert len(returns) == 1
    assert not cfa.loop_heads
    assert returns[0].dst is cfa.function_exits["main"]


def test_assume_pairs_are_complementary():
    cfa = cfa_from_source("""\
int main() {
  int x = 0;
  if (x < 1) { x = 1; } else { x = 2; }
  return x;
}
""")
    assumes = [e for e in cfa.edges if isinstance(e, AssumeEdge)]
    assert len(assumes) == 2
    a, b = assumes
    assert a.cond is b.cond and a.truth != b.truth and a.src is b.src


@pytest.mark.parametrize("name,heads", [
    ("example-safe.c", 1), ("example-unsafe.c", 1), ("example-const.c", 1),
    ("example-sym.c", 1), ("example-safe-bounded.c", 1),
    ("example-nonterm.c", 1), ("example-term.c", 0),
])
def test_shipped_programs_loop_heads(name, heads):
    cfa = load_cfa(name)
    assert len(cfa.loop_heads) == heads


def test_goto_cycle_gets_loop_head():
    cfa = cfa_from_source("""\
int main() {
  int x = 0;
again:
  ;
  x = x + 1;
  if (x < 5) {
    goto again;
  }
  return x;
}
""")
    assert len(cfa.loop_heads) == 1
    result = concrete_execute(cfa, [])
    assert isinstance(result, Terminated) and result.exit_code == 5


def test_error_label_edge_preserved():
    cfa = cfa_from_source("""\
int main() {
  int x = 1;
  if (x != 0) {
    goto ERROR;
  }
  return 0;
ERROR:
  ;
  return 1;
}
""")
    labels = [e for e in cfa.edges if isinstance(e, LabelEdge)]
    assert [l.name for l in labels] == ["ERROR"]
    result = concrete_execute(cfa, [])
    assert isinstance(result, ReachedTarget) and result.message == "error label"


def test_short_circuit_is_structural():
    # the right operand of && must not be evaluated when the left is false:
    # reaching the division by zero would trap
    cfa = cfa_from_source("""\
int main() {
  int x = 0;
  int y = 1;
  if (x != 0 && y / x > 0) {
    return 1;
  }
  return 0;
}
""")
    result = concrete_execute(cfa, [])
    assert isinstance(result, Terminated)
    assert result.reason == "return" and result.exit_code == 0


def test_division_guard_traps():
    cfa = cfa_from_source("""\
extern int __VERIFIER_nondet_int();
int main() {
  int x = __VERIFIER_nondet_int();
  int y = 10 / x;
  return y;
}
""")
    assert concrete_execute(cfa, [0]).reason == "trap"
    assert concrete_execute(cfa, [5]).exit_code == 2


def test_build_is_deterministic():
    source = corpus.gen_source(42)
    dots = set()
    for _ in range(3):
        program = parse_program(source, "<t>")
        typecheck(program)
        dots.add(export_dot(build_cfa(program, "main", "<t>", source)))
    assert len(dots) == 1


def test_entry_function_must_be_parameterless():
    with pytest.raises(VerifierError):
        cfa_from_source("int main(int argc) { return 0; }")


# -- interpreter -------------------------------------------------------------

def test_unsafe_paper_counterexample():
    result = concrete_execute(load_cfa("example-unsafe.c"), [3, 2])
    assert isinstance(result, ReachedTarget)
    assert result.message == "assertion"


def test_safe_terminates():
    result = concrete_execute(load_cfa("example-safe.c"), [3, 2],
                              step_limit=10 ** 6)
    assert result == Terminated(0)


def test_safe_exhaustive_small_inputs():
    cfa = load_cfa("example-safe.c")
    for n, x in itertools.product(range(8), repeat=2):
        result = concrete_execute(cfa, [n, x])
        assert isinstance(result, Terminated) and result.exit_code == 0


def test_input_exhausted():
    with pytest.raises(InputExhausted):
        concrete_execute(load_cfa("example-safe.c"), [])


def test_step_limit():
    cfa = cfa_from_source("int main() { while (1) { } return 0; }")
    assert isinstance(concrete_execute(cfa, [], step_limit=100),
                      StepLimitExceeded)


def test_call_and_return_values():
    cfa = cfa_from_source("""\
int twice(int v) {
  return v + v;
}
int main() {
  int r = twice(21);
  return r;
}
""")
    result = concrete_execute(cfa, [])
    assert result.exit_code == 42


def test_c_corner_semantics():
    # INT_MIN / -1 wraps to INT_MIN; shifts >= 32 give 0 / sign fill
    cfa = cfa_from_source("""\
int main() {
  int m = -2147483647 - 1;
  int q = m / -1;
  int a = 1 << 35;
  int b = m >> 40;
  unsigned int c = 2U >> 33;
  if (q == m && a == 0 && b == -1 && c == 0U) {
    return 1;
  }
  return 0;
}
""")
    assert concrete_execute(cfa, []).exit_code == 1


def test_uninitialized_reads_zero():
    cfa = cfa_from_source("int main() { int x; return x + 3; }")
    assert concrete_execute(cfa, []).exit_code == 3


# -- overflow instrumentation -------------------------------------------------

def overflow_cfa(name_or_source, check_unsigned, from_file=True):
    cfa = load_cfa(name_or_source) if from_file \
        else cfa_from_source(name_or_source)
    return instrument_overflow(cfa, check_unsigned=check_unsigned)


def test_unsigned_subtraction_check():
    # y = n - x (both unsigned): overflows exactly when x > n
    cfa = overflow_cfa("example-safe.c", check_unsigned=True)
    checks = [e.cond for e in cfa.edges if isinstance(e, AssumeEdge)
              and isinstance(e.cond, OverflowCheck)]
    subs = [c for c in checks if c.op == "-" and not c.signed]
    assert subs, "expected an unsigned subtraction check"
    spec = builtin_spec("overflow")
    hit = concrete_execute(cfa, [0, 1], spec=spec)
    assert isinstance(hit, ReachedTarget)
    assert hit.location.kind == "overflow_error"
    ok = concrete_execute(cfa, [3, 2], spec=spec)
    assert isinstance(ok, Terminated)


def test_signed_only_mode_leaves_unsigned_program_alone():
    plain = load_cfa("example-safe.c")
    inst = overflow_cfa("example-safe.c", check_unsigned=False)
    assert len(plain.locations) == len(inst.locations)
    assert len(plain.edges) == len(inst.edges)


def test_statically_infeasible_overflow_branch():
    cfa = overflow_cfa("int main() { int a = 1 + 1; return a; }",
                       check_unsigned=False, from_file=False)
    errors = [l for l in cfa.locations if l.kind == "overflow_error"]
    assert len(errors) == 1
    result = concrete_execute(cfa, [], spec=builtin_spec("overflow"))
    assert isinstance(result, Terminated) and result.exit_code == 2


def test_signed_division_overflow():
    cfa = overflow_cfa("""\
int main() {
  int m = -2147483647 - 1;
  int q = m / -1;
  return q;
}
""", check_unsigned=False, from_file=False)
    result = concrete_execute(cfa, [], spec=builtin_spec("overflow"))
    assert isinstance(result, ReachedTarget)
    assert result.location.kind == "overflow_error"


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 6), st.booleans())
def test_overflow_instrumentation_differential(seed, check_unsigned):
    """Instrumented reachability of OVERFLOW_ERROR must coincide with the
    AST-level exact-integer recomputation, on every input vector."""
    source = corpus.gen_source(seed, division=(seed % 3 == 0))
    program = parse_program(source, "<t>")
    typecheck(program)
    cfa = instrument_overflow(build_cfa(program, "main", "<t>", source),
                              check_unsigned=check_unsigned)
    spec = builtin_spec("overflow")
    for vec in itertools.product(range(4), repeat=corpus.nondet_count(cfa)):
        got = isinstance(concrete_execute(cfa, vec, spec=spec), ReachedTarget)
        oracle = astexec.ast_execute(program, list(vec),
                                     check_unsigned=check_unsigned,
                                     track_overflow=True)
        assert got == (oracle.outcome == "overflow"), (seed, vec)


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 6))
def test_interpreter_differential(seed):
    """The CFA interpreter must agree with the independent AST executor on
    outcome and final variable values."""
    source = corpus.gen_source(seed, division=(seed % 2 == 0))
    program = parse_program(source, "<t>")
    typecheck(program)
    cfa = build_cfa(program, "main", "<t>", source)
    for vec in itertools.product(range(4), repeat=corpus.nondet_count(cfa)):
        got = concrete_execute(cfa, vec)
        oracle = astexec.ast_execute(program, list(vec))
        if isinstance(got, ReachedTarget):
            assert oracle.outcome == "assert_fail", (seed, vec)
        else:
            expected = {"return": "terminated", "halt": "abort",
                        "trap": "trap"}[got.reason]
            assert oracle.outcome == expected, (seed, vec)
            if got.reason == "return":
                for v in corpus.VAR_NAMES:
                    q = f"main::{v}"
                    if q in cfa.var_types:
                        assert got.env.get(q, 0) == oracle.env.get(v, 0), \
                            (seed, vec, v)


# -- termination instrumentation ----------------------------------------------

def test_noloops():
    with pytest.raises(NoLoops):
        instrument_termination(load_cfa("example-term.c"))


def test_liveness_at_head():
    cfa = load_cfa("example-nonterm.c")
    head = cfa.loop_heads[0]
    assert _liveness(cfa)[head.id] == {"main::x"}


def test_nonterm_recurrence_reachable():
    cfa = instrument_termination(load_cfa("example-nonterm.c"))
    spec = builtin_spec("termination")
    # x=4: saving at the first head visit is enough (4 -> 6 -> 8 -> 4)
    hit = concrete_execute(cfa, [4, 1], spec=spec)
    assert isinstance(hit, ReachedTarget)
    assert hit.location.kind == "nonterm_error"
    # x=11 exits immediately; the visit still offers (and declines) a save
    assert isinstance(concrete_execute(cfa, [11, 0], spec=spec), Terminated)
    # saving at the second visit catches the cycle at x=6 as well
    assert isinstance(concrete_execute(cfa, [4, 0, 1], spec=spec),
                      ReachedTarget)


def test_saved_flag_initialized_at_entry():
    cfa = instrument_termination(load_cfa("example-nonterm.c"))
    entry = cfa.function_entries["main"]
    assert len(entry.out_edges) == 1
    init = entry.out_edges[0]
    assert init.describe().startswith("__saved_")


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 6))
def test_termination_instrumentation_differential(seed):
    """A loop-head state repeat seen by the plain interpreter must make
    NONTERM_ERROR concretely reachable with the same inputs plus choices."""
    source = corpus.gen_source(seed, wild_loops=True, asserts=False)
    program = parse_program(source, "<t>")
    typecheck(program)
    plain = build_cfa(program, "main", "<t>", source)
    if not plain.loop_heads:
        return
    live = _liveness(plain)
    heads = {l.id for l in plain.loop_heads}
    spec = builtin_spec("termination")
    instrumented = None
    for vec in itertools.product(range(4), repeat=corpus.nondet_count(plain)):
        visits = []

        def observe(edge, env):
            if edge.dst.id in heads:
                state = tuple(sorted(
                    (v, env.get(v, 0)) for v in live[edge.dst.id]))
                visits.append((edge.dst.id, state))

        concrete_execute(plain, vec, step_limit=3000, on_edge=observe)
        seen: dict = {}
        repeat = None
        for i, vs in enumerate(visits):
            if vs in seen:
                repeat = (seen[vs], i, vs[0])
                break
            seen[vs] = i
        if repeat is None:
            continue
        first, again, head_id = repeat
        choices = []
        for k in range(again):
            if visits[k][0] == head_id:
                if k < first:
                    choices.append(0)
                elif k == first:
                    choices.append(1)
            else:
                choices.append(0)
        if instrumented is None:
            program2 = parse_program(source, "<t>")
            typecheck(program2)
            instrumented = instrument_termination(
                build_cfa(program2, "main", "<t>", source))
        result = concrete_execute(instrumented, list(vec) + choices,
                                  step_limit=10 ** 4, spec=spec)
        assert isinstance(result, ReachedTarget), (seed, vec)
        assert result.location.kind == "nonterm_error"
        return  # one confirmed recurrence per program is enough


# -- DOT export ----------------------------------------------------------------

def test_dot_export():
    dot = export_dot(load_cfa("example-safe.c"))
    assert dot.startswith("digraph CFA {")
    assert dot.count("subgraph") == 1
    assert "doublecircle" in dot


def test_dot_two_functions():
    dot = export_dot(cfa_from_source(
        "int f(int x) { return x; } int main() { int y = f(1); return y; }"))
    assert dot.count("subgraph") == 2
