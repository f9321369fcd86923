"""Value-domain tests: transfer/join algebra, counterexample checks, greedy
refinement, and the three flavor drivers — differentially checked against
brute-force enumeration and direct solver queries."""

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import cfa_from_source, load_cfa
from corpus import build, gen_source, oracle_verdict
from minicpa import log
from minicpa.cfa import ReachedTarget, concrete_execute
from minicpa.cfa.model import AssumeEdge
from minicpa.engine import (
    Exhausted, Exploration, Limits, TargetReached, assemble_composite,
)
from minicpa.errors import RefinementStall
from minicpa.frontend.syntax import free_variables
from minicpa.smt.client import shared_client
from minicpa.specs import builtin_spec
from minicpa.value import (
    TRACK_ALL, TRACK_NOTHING, FeasiblePath, InfeasiblePath, ValueCpa,
    ValuePrecision, ValueState, feasibility_check, havoc_path_formula,
    make_cpa, refine_value_precision, run_value_analysis, value_merge_join,
    value_transfer,
)

SPEC = builtin_spec("default")
CPAS = "location, callstack, spec, value"
CFG_NOCEGAR = {"CompositeCPA.cpas": CPAS, "analysis.stopOperator": "never"}
CFG_JOIN = {"CompositeCPA.cpas": CPAS, "cpa.value.merge": "JOIN"}
CFG_CEGAR = {"CompositeCPA.cpas": CPAS, "analysis.algorithm.CEGAR": "true"}


@pytest.fixture(scope="module")
def client():
    return shared_client()


def S(**kwargs):
    return ValueState.of({f"main::{k}": v for k, v in kwargs.items()})


def straight_line_states(cfa, prec=TRACK_ALL):
    """Abstract states along a straight-line program, edge by edge."""
    state = ValueState()
    loc = cfa.entry
    out = []
    while loc.out_edges:
        assert len(loc.out_edges) == 1, "program is not straight-line"
        edge = loc.out_edges[0]
        succ = value_transfer(state, edge, prec)
        assert len(succ) == 1
        state = succ[0]
        out.append((edge, state))
        loc = edge.dst
    return out


# ---------------------------------------------------------------------------
# Transfer


def test_transfer_tracks_constant_assignments():
    cfa = cfa_from_source("int main() { int x = 0; int z = x * 5;"
                          " return 0; }")
    final = straight_line_states(cfa)[-1][1]
    mapping = final.as_dict()
    assert mapping["main::x"] == 0
    assert mapping["main::z"] == 0


def test_transfer_drops_unknown_operands():
    cfa = cfa_from_source(
        "extern int __VERIFIER_nondet_int();\n"
        "int main() { int x = __VERIFIER_nondet_int(); int y = x + 1;"
        " int z = 2; return 0; }")
    final = straight_line_states(cfa)[-1][1].as_dict()
    assert "main::x" not in final
    assert "main::y" not in final
    assert final["main::z"] == 2


def test_transfer_decl_without_initializer_is_unknown():
    cfa = cfa_from_source("int main() { int x; int y = 1; return 0; }")
    final = straight_line_states(cfa)[-1][1].as_dict()
    assert "main::x" not in final
    assert final["main::y"] == 1


def _assume_edges(cfa, needle: str):
    return [e for e in cfa.edges
            if isinstance(e, AssumeEdge) and needle in e.describe()]


def test_transfer_concrete_assume_prunes_dead_branch():
    cfa = cfa_from_source("extern void __assert_fail();\n"
                          "int main() { int x = 5; if (x < 2) {"
                          " __assert_fail(); } return 0; }")
    state = S(x=5)
    true_edge = next(e for e in _assume_edges(cfa, "x < 2") if e.truth)
    false_edge = next(e for e in _assume_edges(cfa, "x < 2") if not e.truth)
    assert value_transfer(state, true_edge, TRACK_ALL) == []
    assert value_transfer(state, false_edge, TRACK_ALL) == [state]


def test_transfer_unknown_assume_keeps_state():
    cfa = cfa_from_source("extern int __VERIFIER_nondet_int();\n"
                          "int main() { int x = __VERIFIER_nondet_int();"
                          " if (x < 2) { return 1; } return 0; }")
    for edge in _assume_edges(cfa, "x < 2"):
        assert value_transfer(ValueState(), edge, TRACK_ALL) == [ValueState()]


def test_transfer_wraparound_arithmetic():
    cfa = cfa_from_source("int main() { unsigned int x = 0u - 1u;"
                          " int y = 2147483647 + 1; return 0; }")
    final = straight_line_states(cfa)[-1][1].as_dict()
    assert final["main::x"] == 0xFFFFFFFF
    assert final["main::y"] == 0x80000000


def test_transfer_respects_scoped_precision():
    cfa = cfa_from_source("int main() { int x = 1; int y = 2; return 0; }")
    chain = straight_line_states(cfa, TRACK_NOTHING)
    assert all(state == ValueState() for _, state in chain)
    decl_y = next(e for e, _ in chain if "y = 2" in e.describe())
    scoped = ValuePrecision(scoped=frozenset(
        {(decl_y.dst.id, "main::y")}))
    succ = value_transfer(S(x=1), decl_y, scoped)
    assert succ == [S(y=2)]  # x is not tracked at the destination


def test_transfer_call_binds_parameters():
    cfa = cfa_from_source("int add(int a, int b) { return a + b; }\n"
                          "int main() { int r = add(2, 3); return r; }")
    call = next(e for e in cfa.edges if e.describe().startswith("add("))
    succ = value_transfer(ValueState(), call, TRACK_ALL)
    mapping = succ[0].as_dict()
    assert mapping["add::a"] == 2
    assert mapping["add::b"] == 3


# ---------------------------------------------------------------------------
# Join and coverage


def test_merge_join_drops_disagreements():
    joined = value_merge_join(S(x=0, z=0), S(x=1, z=0))
    assert joined == S(z=0)


def test_merge_join_identity_and_top():
    s = S(x=1, y=2)
    assert value_merge_join(s, s) == s
    assert value_merge_join(ValueState(), s) == ValueState()
    assert value_merge_join(s, ValueState()) == ValueState()


small_maps = st.dictionaries(
    st.sampled_from(["main::a", "main::b", "main::c"]),
    st.integers(min_value=0, max_value=3), max_size=3)


@settings(max_examples=200, deadline=None)
@given(small_maps, small_maps)
def test_merge_join_is_least_upper_bound(m1, m2):
    cpa = ValueCpa()
    s1, s2 = ValueState.of(m1), ValueState.of(m2)
    joined = value_merge_join(s1, s2)
    assert cpa.covers(s1, joined)
    assert cpa.covers(s2, joined)
    agreeing = {v: c for v, c in m1.items() if m2.get(v) == c}
    assert joined.as_dict() == agreeing


def test_covers_is_the_subset_order():
    cpa = ValueCpa()
    assert cpa.covers(S(x=1), ValueState())
    assert cpa.covers(S(x=1), S(x=1))
    assert cpa.covers(S(x=1, y=2), S(y=2))
    assert not cpa.covers(S(x=1), S(x=2))
    assert not cpa.covers(S(x=1), S(y=0))
    assert not cpa.covers(ValueState(), S(x=1))


def test_make_cpa_reads_flavor_keys():
    assert make_cpa({}).join is False
    assert make_cpa({}).precision is TRACK_ALL
    assert make_cpa({"cpa.value.merge": "JOIN"}).join is True
    assert make_cpa({"analysis.algorithm.CEGAR": "true"}).precision \
        == TRACK_NOTHING


# ---------------------------------------------------------------------------
# Counterexample check


def _first_target(cfa, config):
    composite = assemble_composite(config, cfa, SPEC)
    result = Exploration(composite, cfa).run()
    assert isinstance(result, TargetReached)
    return result


def test_feasibility_confirms_real_error_path(client):
    cfa = load_cfa("example-unsafe.c")
    result = _first_target(cfa, CFG_NOCEGAR)
    outcome = feasibility_check(result.path, client)
    assert isinstance(outcome, FeasiblePath)
    replay = concrete_execute(cfa, outcome.inputs)
    assert isinstance(replay, ReachedTarget)
    assert replay.location.id == result.path.target.state.location.id


def test_feasibility_rejects_contradictory_path(client):
    cfa = cfa_from_source("extern void __assert_fail();\n"
                          "int main() { int x = 0; if (x != 0) {"
                          " __assert_fail(); } return 0; }")
    result = _first_target(cfa, CFG_CEGAR)
    outcome = feasibility_check(result.path, client)
    assert isinstance(outcome, InfeasiblePath)
    # the pivot is where the prefix first becomes unsatisfiable
    from minicpa.smt import ssa
    k = outcome.pivot_index
    assert client.check([ssa.path_formula(result.path.edges[:k])[0]]).is_unsat
    assert client.check(
        [ssa.path_formula(result.path.edges[:k - 1])[0]]).is_sat
    assert outcome.pivot is result.path.nodes[k].state.location


def test_feasibility_trivial_straight_path(client):
    cfa = cfa_from_source("extern void __assert_fail();\n"
                          "int main() { __assert_fail(); return 0; }")
    result = _first_target(cfa, CFG_NOCEGAR)
    outcome = feasibility_check(result.path, client)
    assert isinstance(outcome, FeasiblePath)
    assert outcome.inputs == []


def _spurious_paths(cfa, limit=3):
    """Up to `limit` infeasible abstract paths of the nothing-tracked
    composite, enumerated by prune-and-continue."""
    composite = assemble_composite(
        dict(CFG_CEGAR, **{"analysis.stopOperator": "never"}), cfa, SPEC)
    exploration = Exploration(composite, cfa,
                              Limits(max_states=4000, max_seconds=10))
    found = []
    solver = shared_client()
    while len(found) < limit:
        result = exploration.run()
        if not isinstance(result, TargetReached):
            break
        if isinstance(feasibility_check(result.path, solver),
                      InfeasiblePath):
            found.append(result.path)
        exploration.prune_target(result.node)
    return found


def test_pivot_is_first_unsat_prefix_on_corpus(client):
    from minicpa.smt import ssa
    checked = 0
    for seed in range(40):
        cfa = build(gen_source(seed, max_loops=0, max_vars=3))
        for path in _spurious_paths(cfa, limit=2):
            outcome = feasibility_check(path, client)
            assert isinstance(outcome, InfeasiblePath)
            scan = next(
                i for i in range(1, len(path.edges) + 1)
                if client.check(
                    [ssa.path_formula(path.edges[:i])[0]]).is_unsat)
            assert outcome.pivot_index == scan
            checked += 1
        if checked >= 8:
            break
    assert checked >= 3


# ---------------------------------------------------------------------------
# Greedy refinement


def test_refiner_keeps_only_the_checked_variable(client):
    # the loop mangles x and y, but the only contradiction on the error
    # path is z = 0 against z != 0: tracking z alone excludes it
    cfa = cfa_from_source(
        "extern void __assert_fail();\n"
        "extern unsigned int __VERIFIER_nondet_uint();\n"
        "int main() { unsigned int x = __VERIFIER_nondet_uint();"
        " unsigned int y = 0; unsigned int z = 0;"
        " while (x < 2) { x = x + 1; y = z + 1; }"
        " if (z != 0) { __assert_fail(); } return 0; }")
    result = _first_target(cfa, CFG_CEGAR)
    refined = refine_value_precision(result.path, TRACK_NOTHING, client)
    assert refined.variables() == {"main::z"}
    verdict = run_value_analysis(CFG_CEGAR, cfa, SPEC, Limits(max_seconds=20))
    assert verdict.is_true


def test_refiner_keeps_branch_variable_of_contradictory_assumes(client):
    cfa = cfa_from_source(
        "extern void __assert_fail();\n"
        "extern int __VERIFIER_nondet_int();\n"
        "int main() { int a = __VERIFIER_nondet_int(); int b = 7;"
        " if (a > 0) { if (a < 0) { __assert_fail(); } } return 0; }")
    result = _first_target(cfa, CFG_CEGAR)
    refined = refine_value_precision(result.path, TRACK_NOTHING, client)
    assert refined.variables() == {"main::a"}


def test_refiner_picks_loop_counter_on_bypass_path(client):
    # with everything unknown the shortest abstract error path skips the
    # loop entirely; the contradiction is x = 0 against the exit condition,
    # so the refinement tracks x, not z
    cfa = load_cfa("example-const.c")
    result = _first_target(cfa, CFG_CEGAR)
    refined = refine_value_precision(result.path, TRACK_NOTHING, client)
    assert refined.variables() == {"main::x"}


def test_refiner_stalls_when_already_tracked(client):
    cfa = load_cfa("example-const.c")
    result = _first_target(cfa, CFG_CEGAR)
    refined = refine_value_precision(result.path, TRACK_NOTHING, client)
    with pytest.raises(RefinementStall):
        refine_value_precision(result.path, refined, client)
    with pytest.raises(RefinementStall):
        refine_value_precision(result.path, TRACK_ALL, client)


def _path_variables(path):
    out = set()
    for edge in path.edges:
        if isinstance(edge, AssumeEdge):
            out |= free_variables(edge.cond)
        elif hasattr(edge, "var"):
            out.add(edge.var)
    return out


def _minimal_kept_sets(edges, variables, solver):
    """Brute force: all inclusion-minimal keep-sets whose complement can be
    havocked with the path staying infeasible."""
    sufficient = []
    for r in range(len(variables) + 1):
        for keep in itertools.combinations(sorted(variables), r):
            havoc = frozenset(variables) - set(keep)
            if solver.check([havoc_path_formula(edges, havoc)]).is_unsat:
                sufficient.append(frozenset(keep))
    return [k for k in sufficient if not any(o < k for o in sufficient)]


def test_refiner_matches_minimal_set_oracle(client):
    checked = 0
    for seed in range(60):
        cfa = build(gen_source(seed, max_loops=0, max_vars=3))
        for path in _spurious_paths(cfa, limit=2):
            kept = refine_value_precision(
                path, TRACK_NOTHING, client).variables()
            minimal = _minimal_kept_sets(
                path.edges, _path_variables(path), client)
            assert kept in minimal, \
                f"greedy kept {set(kept)}, minimal sets {minimal}"
            checked += 1
        if checked >= 6:
            break
    assert checked >= 3


# ---------------------------------------------------------------------------
# Flavor drivers


def test_nocegar_confirms_violation_with_replayable_inputs():
    cfa = load_cfa("example-unsafe.c")
    with log.capture() as cap:
        verdict = run_value_analysis(CFG_NOCEGAR, cfa, SPEC)
    assert verdict.is_false
    assert verdict.reason == "assertion"
    replay = concrete_execute(cfa, verdict.counterexample.inputs)
    assert isinstance(replay, ReachedTarget)
    assert ("Error path found, starting counterexample check with "
            "CPACHECKER. (CounterexampleCheckAlgorithm.checkCounterexample,"
            " INFO)") in cap.lines
    assert ("Error path found and confirmed by counterexample check with "
            "CPACHECKER. (CounterexampleCheckAlgorithm.checkCounterexample,"
            " INFO)") in cap.lines


def test_nocegar_proves_bounded_loop_program():
    cfa = cfa_from_source(
        "extern void __assert_fail();\n"
        "extern int __VERIFIER_nondet_int();\n"
        "int main() { int a = __VERIFIER_nondet_int(); int i = 0;"
        " while (i < 2) { i = i + 1; }"
        " if (i != 2) { __assert_fail(); } return 0; }")
    verdict = run_value_analysis(CFG_NOCEGAR, cfa, SPEC)
    assert verdict.is_true


def test_nocegar_prunes_spurious_and_reports_true():
    # the abstract path assuming both a > 0 and a < 0 survives value
    # tracking (a is never concrete) but fails the solver check
    cfa = cfa_from_source(
        "extern void __assert_fail();\n"
        "extern int __VERIFIER_nondet_int();\n"
        "int main() { int a = __VERIFIER_nondet_int(); int b = 0;"
        " if (a > 0) { b = 1; } else { b = 2; }"
        " if (b == 1) { if (a < 0) { __assert_fail(); } } return 0; }")
    assert oracle_verdict(cfa, domain=range(-4, 4))[0] == "TRUE"
    with log.capture() as cap:
        verdict = run_value_analysis(CFG_NOCEGAR, cfa, SPEC)
    assert verdict.is_true
    assert verdict.stats["pruned"] >= 1
    assert ("Error path found but identified as infeasible. "
            "(CounterexampleCheckAlgorithm.checkCounterexample, INFO)"
            ) in cap.lines


def test_join_flavor_proves_constant_propagation_example():
    cfa = load_cfa("example-const.c")
    verdict = run_value_analysis(CFG_JOIN, cfa, SPEC)
    assert verdict.is_true
    # at the post-loop check only z is still known, pinned to 0
    check = next(e for e in cfa.edges if isinstance(e, AssumeEdge)
                 and "z != 0" in e.describe())
    value_index = 3
    states = [n.state[value_index] for n in verdict.arg.alive_nodes()
              if n.state.location is check.src and not n.is_covered]
    assert states
    assert all(s.as_dict() == {"main::z": 0} for s in states)


def test_join_flavor_gives_up_after_spurious_path():
    cfa = load_cfa("example-safe.c")
    with log.capture() as cap:
        verdict = run_value_analysis(CFG_JOIN, cfa, SPEC,
                                     Limits(max_states=2000, max_seconds=15))
    assert verdict.status == "UNKNOWN"
    assert verdict.reason == "analysis incomplete"
    assert ("Infeasible counterexample found, but could not remove it from "
            "the ARG. Therefore, we cannot prove safety. "
            "(ExceptionHandlingAlgorithm.handleExceptionWithErrorPath,"
            " WARNING)") in cap.lines


def test_cegar_flavor_proves_constant_propagation_example():
    cfa = load_cfa("example-const.c")
    verdict = run_value_analysis(CFG_CEGAR, cfa, SPEC,
                                 Limits(max_seconds=20))
    assert verdict.is_true
    assert verdict.stats["refinements"] >= 1


def test_cegar_flavor_finds_real_violation():
    cfa = load_cfa("example-unsafe.c")
    verdict = run_value_analysis(CFG_CEGAR, cfa, SPEC,
                                 Limits(max_seconds=20))
    assert verdict.is_false
    replay = concrete_execute(cfa, verdict.counterexample.inputs)
    assert isinstance(replay, ReachedTarget)


def test_cegar_precision_grows_strictly_until_proof(client):
    cfa = load_cfa("example-const.c")
    composite = assemble_composite(CFG_CEGAR, cfa, SPEC)
    vi = composite.component_index("value")
    precision = composite.initial_precision(cfa)
    refinements = 0
    for _ in range(12):
        result = Exploration(composite, cfa, precision=precision).run()
        if isinstance(result, Exhausted):
            break
        assert isinstance(result, TargetReached)
        outcome = feasibility_check(result.path, client)
        assert isinstance(outcome, InfeasiblePath)
        refined = refine_value_precision(result.path, precision[vi], client)
        assert precision[vi].scoped < refined.scoped  # strict growth
        precision = precision[:vi] + (refined,) + precision[vi + 1:]
        refinements += 1
    else:
        pytest.fail("refinement did not converge")
    assert refinements >= 1
    # x pins the loop near its initialization, z excludes the error at the
    # check; y never matters
    assert {v for _, v in precision[vi].scoped} == {"main::x", "main::z"}


# ---------------------------------------------------------------------------
# Differential corpus checks


def test_nocegar_is_exact_on_loop_free_corpus():
    for seed in range(40):
        source = gen_source(seed, max_loops=0)
        cfa = build(source)
        expected, witness = oracle_verdict(cfa)
        verdict = run_value_analysis(CFG_NOCEGAR, cfa, SPEC,
                                     Limits(max_states=20000,
                                            max_seconds=25))
        assert verdict.status == expected, \
            f"seed {seed}: {verdict.status} != oracle {expected}\n{source}"
        if verdict.is_false:
            replay = concrete_execute(cfa, verdict.counterexample.inputs)
            assert isinstance(replay, ReachedTarget), f"seed {seed}"


def test_all_flavors_sound_on_looping_corpus():
    configs = {"nocegar": CFG_NOCEGAR, "join": CFG_JOIN, "cegar": CFG_CEGAR}
    for seed in range(25):
        source = gen_source(seed + 1000, max_loops=2)
        cfa = build(source)
        expected, _ = oracle_verdict(cfa)
        for name, config in configs.items():
            verdict = run_value_analysis(
                config, cfa, SPEC, Limits(max_states=3000, max_seconds=10))
            if verdict.is_true:
                assert expected == "TRUE", \
                    f"seed {seed} {name}: claimed TRUE, oracle {expected}" \
                    f"\n{source}"
            if verdict.is_false:
                replay = concrete_execute(cfa, verdict.counterexample.inputs)
                assert isinstance(replay, ReachedTarget), \
                    f"seed {seed} {name}: FALSE did not replay\n{source}"
