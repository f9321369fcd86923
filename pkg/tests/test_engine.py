"""Engine tests: waitlist algorithm, ARG bookkeeping, merge/stop behavior,
and the refinement driver — differentially checked against brute force."""

import pytest

from conftest import cfa_from_source, load_cfa
from corpus import gen_source, build, oracle_verdict
from minicpa.cfa import concrete_execute, ReachedTarget
from minicpa.engine import (
    Arg, BREAK, CONTINUE, CallstackCpa, CompositeCpa, Exhausted, Exploration,
    Feasible, Limits, LimitHit, LocationCpa, PrecisionIncrement, Pruned,
    SpecCpa, TargetReached, Verdict, assemble_composite, cegar_loop,
    cpa_algorithm,
    export_arg_dot, extract_error_path,
)
from minicpa.cfa.model import NondetEdge
from minicpa.errors import RefinementStall, UnknownCpaName
from minicpa.specs import builtin_spec
from toycpa import ConcreteCpa, ConcreteSetCpa, TrackedCpa

DEFAULT_SPEC = builtin_spec("default")


def concrete_composite(domain=None, join=False):
    toy = ConcreteSetCpa() if join else ConcreteCpa()
    if domain is not None:
        toy.domain = domain
    return CompositeCpa([LocationCpa(), CallstackCpa(),
                         SpecCpa(DEFAULT_SPEC), toy])


def observer_composite():
    return CompositeCpa([LocationCpa(), CallstackCpa(),
                         SpecCpa(DEFAULT_SPEC)])


def path_inputs(path):
    """Nondet choices recorded along an error path of concrete states."""
    values = []
    for edge, node in zip(path.edges, path.nodes[1:]):
        if isinstance(edge, NondetEdge):
            env = dict(node.state[3])
            values.append(env[edge.var])
    return values


# ---------------------------------------------------------------------------
# Basic exploration


def test_trivial_program_exhausts():
    cfa = cfa_from_source("int main() { return 0; }")
    result = cpa_algorithm(observer_composite(), cfa)
    assert isinstance(result, Exhausted)
    assert not result.truncated
    assert result.arg.non_covered_count() == 3
    result.arg.validate()


def test_unsafe_example_reaches_target_and_replays():
    cfa = load_cfa("example-unsafe.c")
    result = cpa_algorithm(concrete_composite(), cfa)
    assert isinstance(result, TargetReached)
    target_state = result.path.target.state
    spec_state = target_state[2]
    assert spec_state.is_error and spec_state.message == "assertion"
    inputs = path_inputs(result.path)
    replay = concrete_execute(cfa, inputs)
    assert isinstance(replay, ReachedTarget)
    result.arg.validate()


def test_safe_example_exhausts():
    cfa = load_cfa("example-safe.c")
    result = cpa_algorithm(concrete_composite(), cfa)
    assert isinstance(result, Exhausted)
    result.arg.validate()


def test_error_path_edges_are_cfa_adjacent():
    cfa = load_cfa("example-unsafe.c")
    result = cpa_algorithm(concrete_composite(), cfa)
    path = result.path
    assert path.nodes[0] is result.arg.root
    for edge, before, after in zip(path.edges, path.nodes, path.nodes[1:]):
        assert edge.src is before.state.location
        assert edge.dst is after.state.location


def test_coverage_deduplicates_converging_branches():
    source = ("extern int __VERIFIER_nondet_int();\n"
              "int main() { int a = __VERIFIER_nondet_int();"
              " if (a > 0) { a = 1; } else { a = 1; } return a; }")
    cfa = cfa_from_source(source)
    result = cpa_algorithm(concrete_composite(domain=(0, 1)), cfa)
    assert isinstance(result, Exhausted)
    alive = len(result.arg.alive_nodes())
    assert result.arg.non_covered_count() < alive
    result.arg.validate()


# ---------------------------------------------------------------------------
# Limits and truncation


def test_state_limit_hits():
    cfa = cfa_from_source(
        "int main() { unsigned int x = 0; while (1) { x = x + 1; }"
        " return 0; }")
    result = cpa_algorithm(concrete_composite(), cfa,
                           Limits(max_states=40))
    assert isinstance(result, LimitHit)
    assert result.reason == "state limit"


def test_time_limit_hits():
    cfa = cfa_from_source(
        "int main() { unsigned int x = 0; while (1) { x = x + 1; }"
        " return 0; }")
    result = cpa_algorithm(concrete_composite(), cfa,
                           Limits(max_seconds=0.05))
    assert isinstance(result, LimitHit)
    assert result.reason == "time limit"


class _BoundedCpa(ConcreteCpa):
    """Breaks exploration once a variable passes a cap (loop-bound style)."""

    def __init__(self, var, cap):
        super().__init__()
        self.var, self.cap = var, cap

    def prec_adjust(self, state, precision, exploration):
        if dict(state).get(self.var, 0) > self.cap:
            return state, precision, BREAK
        return state, precision, CONTINUE


def test_prec_adjust_break_truncates_exploration():
    cfa = cfa_from_source(
        "int main() { unsigned int x = 0; while (1) { x = x + 1; }"
        " return 0; }")
    composite = CompositeCpa([LocationCpa(), CallstackCpa(),
                              SpecCpa(DEFAULT_SPEC),
                              _BoundedCpa("main::x", 3)])
    result = cpa_algorithm(composite, cfa)
    assert isinstance(result, Exhausted)
    assert result.truncated
    result.arg.validate()


# ---------------------------------------------------------------------------
# Merge behavior


def test_merge_join_collapses_diamond():
    source = ("extern int __VERIFIER_nondet_int();\n"
              "int main() { int a = __VERIFIER_nondet_int(); int b = 0;"
              " if (a > 0) { b = 1; } else { b = 2; } return b; }")
    cfa = cfa_from_source(source)
    composite = concrete_composite(domain=(0, 1), join=True)
    exploration = Exploration(composite, cfa)
    result = exploration.run()
    assert isinstance(result, Exhausted)
    result.arg.validate()
    # the post-branch location holds a single joined state covering both arms
    return_loc = [loc for loc in cfa.locations if loc.kind == "exit"][0]
    buckets = [nodes for key, nodes in exploration.reached.items()
               if key[0] == return_loc.id]
    states = [n.state for bucket in buckets for n in bucket
              if n.alive and not n.is_covered]
    assert len(states) == 1
    joined = states[0][3]
    assert len(joined) == 2  # b=1 and b=2 variants both present


def test_merge_join_matches_oracle_on_corpus():
    for seed in range(12):
        source = gen_source(seed + 900, max_loops=1, calls=False,
                            division=False)
        cfa = build(source, "main", f"<join-{seed}>")
        expected, _ = oracle_verdict(cfa, range(4))
        result = cpa_algorithm(concrete_composite(join=True), cfa)
        result.arg.validate()
        got = "FALSE" if isinstance(result, TargetReached) else "TRUE"
        assert got == expected, f"seed {seed}"


# ---------------------------------------------------------------------------
# Soundness + determinism on the random corpus


@pytest.mark.parametrize("order", ["bfs", "dfs"])
def test_concrete_exploration_matches_oracle(order):
    for seed in range(25):
        source = gen_source(seed + 300, max_loops=1, division=False)
        cfa = build(source, "main", f"<engine-{seed}>")
        expected, witness = oracle_verdict(cfa, range(4))
        result = cpa_algorithm(concrete_composite(), cfa, order=order)
        result.arg.validate()
        if expected == "FALSE":
            assert isinstance(result, TargetReached), f"seed {seed}"
            replay = concrete_execute(cfa, path_inputs(result.path))
            assert isinstance(replay, ReachedTarget), f"seed {seed}"
        else:
            assert isinstance(result, Exhausted), f"seed {seed}"


def test_sep_composite_pops_each_abstract_state_once():
    class CountingComposite(CompositeCpa):
        def __init__(self, components):
            super().__init__(components)
            self.pops = []

        def prec_adjust(self, state, precision, exploration):
            self.pops.append(state)
            return super().prec_adjust(state, precision, exploration)

    for seed in range(10):
        source = gen_source(seed + 4400, max_loops=0, division=False)
        cfa = build(source, "main", f"<once-{seed}>")
        composite = CountingComposite([LocationCpa(), CallstackCpa(),
                                       SpecCpa(DEFAULT_SPEC), ConcreteCpa()])
        result = cpa_algorithm(composite, cfa)
        assert isinstance(result, (TargetReached, Exhausted))
        assert len(composite.pops) == len(set(composite.pops)), \
            f"seed {seed}: an abstract state was expanded twice"


# ---------------------------------------------------------------------------
# Target pruning (counterexample-check style)


def test_prune_target_then_find_second_target():
    source = ("extern void __assert_fail();\n"
              "extern int __VERIFIER_nondet_int();\n"
              "int main() { int a = __VERIFIER_nondet_int();"
              " if (a > 0) { __assert_fail(); } else { __assert_fail(); }"
              " return 0; }")
    cfa = cfa_from_source(source)
    exploration = Exploration(concrete_composite(domain=(0, 1)), cfa)
    first = exploration.run()
    assert isinstance(first, TargetReached)
    exploration.arg.validate()
    exploration.prune_target(first.node)
    exploration.arg.validate()
    second = exploration.run()
    assert isinstance(second, TargetReached)
    assert second.node is not first.node
    assert second.path.signature() != first.path.signature()
    exploration.prune_target(second.node)
    third = exploration.run()
    assert isinstance(third, Exhausted)
    exploration.arg.validate()


def test_prune_target_with_coverage_disabled_finds_every_syntactic_path():
    # With nothing tracked, both branch prefixes carry the same abstract
    # state, so under stop-sep the second prefix would be covered at the
    # join point and the suffix to the target explored only once.  With
    # coverage disabled every syntactic path keeps its own ARG branch, and
    # pruning one target leaves the other intact.
    source = ("extern void __assert_fail();\n"
              "extern int __VERIFIER_nondet_int();\n"
              "int main() { int a = __VERIFIER_nondet_int(); int b = 0;"
              " if (a > 0) { b = 1; } else { b = 2; }"
              " if (a < 0) { __assert_fail(); } return 0; }")
    cfa = cfa_from_source(source)
    composite = CompositeCpa([LocationCpa(), CallstackCpa(),
                              SpecCpa(DEFAULT_SPEC), TrackedCpa()],
                             stop_enabled=False)
    exploration = Exploration(composite, cfa)
    first = exploration.run()
    assert isinstance(first, TargetReached)
    first_sig = first.path.signature()
    exploration.prune_target(first.node)
    exploration.arg.validate()
    second = exploration.run()
    assert isinstance(second, TargetReached)
    second_sig = second.path.signature()
    assert second_sig != first_sig
    # the two paths differ exactly in the branch prefix
    assert second_sig[-1] == first_sig[-1]
    exploration.prune_target(second.node)
    third = exploration.run()
    assert isinstance(third, Exhausted)
    exploration.arg.validate()


def test_stop_sep_hides_second_prefix_behind_coverage():
    # Companion to the test above: the same program under stop-sep yields
    # exactly one target even after pruning, because the second prefix was
    # collapsed at the join point before the suffix was explored.
    source = ("extern void __assert_fail();\n"
              "extern int __VERIFIER_nondet_int();\n"
              "int main() { int a = __VERIFIER_nondet_int(); int b = 0;"
              " if (a > 0) { b = 1; } else { b = 2; }"
              " if (a < 0) { __assert_fail(); } return 0; }")
    cfa = cfa_from_source(source)
    composite = CompositeCpa([LocationCpa(), CallstackCpa(),
                              SpecCpa(DEFAULT_SPEC), TrackedCpa()])
    exploration = Exploration(composite, cfa)
    first = exploration.run()
    assert isinstance(first, TargetReached)
    exploration.prune_target(first.node)
    second = exploration.run()
    assert isinstance(second, Exhausted)


# ---------------------------------------------------------------------------
# Error-path extraction and DOT export


def _chain(arg, parent, state_edge_pairs):
    node = parent
    for edge, state in state_edge_pairs:
        node = arg.add_child(node, edge, state)
    return node


def test_extract_error_path_prefers_shortest_then_smallest_id():
    cfa = cfa_from_source("int main() { return 0; }")
    e1, e2 = cfa.entry.out_edges[0], cfa.entry.out_edges[0].dst.out_edges[0]
    arg = Arg()
    root = arg.make_root("root")
    a = arg.add_child(root, e1, "a")      # id 1
    b = arg.add_child(root, e1, "b")      # id 2
    t = arg.add_child(a, e2, "t")         # id 3, also reachable via b
    arg.link(b, e2, t)
    path = extract_error_path(arg, t)
    assert [n.node_id for n in path.nodes] == [0, 1, 3]

    long_way = _chain(arg, root, [(e1, "c"), (e2, "d")])
    arg.link(root, e1, t)  # now a direct edge root->t exists
    path2 = extract_error_path(arg, t)
    assert [n.node_id for n in path2.nodes] == [0, 3]


def test_arg_validator_rejects_covered_node_with_children():
    cfa = cfa_from_source("int main() { return 0; }")
    edge = cfa.entry.out_edges[0]
    arg = Arg()
    root = arg.make_root("r")
    a = arg.add_child(root, edge, "a")
    b = arg.add_child(a, edge, "b")
    a.covered_by = root  # bypass cover() to simulate corruption
    root.covers.append(a)
    with pytest.raises(AssertionError):
        arg.validate()


def test_arg_validator_rejects_cycles():
    cfa = cfa_from_source("int main() { return 0; }")
    edge = cfa.entry.out_edges[0]
    arg = Arg()
    root = arg.make_root("r")
    a = arg.add_child(root, edge, "a")
    b = arg.add_child(a, edge, "b")
    arg.link(b, edge, a)
    with pytest.raises(AssertionError):
        arg.validate()


def test_export_dot_marks_error_path_and_coverage():
    cfa = load_cfa("example-unsafe.c")
    exploration = Exploration(concrete_composite(), cfa)
    result = exploration.run()
    assert isinstance(result, TargetReached)
    text = export_arg_dot(result.arg, result.path,
                          label=exploration.composite.describe)
    assert text.startswith("digraph ARG {")
    assert "color=red" in text
    assert "style=dashed" in text  # some converging path is covered
    assert "covered by" in text


def test_export_dot_two_nodes():
    cfa = cfa_from_source("int main() { return 0; }")
    edge = cfa.entry.out_edges[0]
    arg = Arg()
    root = arg.make_root("start")
    arg.add_child(root, edge, "next")
    text = export_arg_dot(arg)
    assert text.count(" -> ") == 1
    assert 'label="0: start"' in text
    assert 'label="1: next"' in text


# ---------------------------------------------------------------------------
# CEGAR driver


def test_cegar_feasible_counterexample_is_false():
    cfa = load_cfa("example-unsafe.c")

    def refiner(path, precision):
        return Feasible(path_inputs(path), path)

    verdict = cegar_loop(concrete_composite(), refiner, cfa)
    assert verdict.is_false
    assert verdict.reason == "assertion"
    assert verdict.counterexample.inputs
    assert verdict.stats["refinements"] == 0


def test_cegar_true_never_calls_refiner():
    cfa = load_cfa("example-safe.c")
    calls = []

    def refiner(path, precision):
        calls.append(path)
        raise AssertionError("refiner must not run on a safe program")

    verdict = cegar_loop(concrete_composite(), refiner, cfa)
    assert verdict.is_true
    assert not calls


def test_cegar_stalls_without_precision_growth():
    cfa = load_cfa("example-unsafe.c")

    def refiner(path, precision):
        return PrecisionIncrement(precision)

    verdict = cegar_loop(concrete_composite(), refiner, cfa)
    assert verdict.status == "UNKNOWN"
    assert verdict.reason == "refinement made no progress"


def test_cegar_refiner_raising_stall_is_unknown():
    cfa = load_cfa("example-unsafe.c")

    def refiner(path, precision):
        raise RefinementStall("no refinable variable on the path")

    verdict = cegar_loop(concrete_composite(), refiner, cfa)
    assert verdict.status == "UNKNOWN"
    assert "refinable" in verdict.reason


def test_cegar_precision_increment_prunes_spurious_path():
    source = ("extern void __assert_fail();\n"
              "int main() { int x = 0; if (x != 0) { __assert_fail(); }"
              " return 0; }")
    cfa = cfa_from_source(source)
    composite = CompositeCpa([LocationCpa(), CallstackCpa(),
                              SpecCpa(DEFAULT_SPEC), TrackedCpa()])
    tracked_index = composite.component_index("tracked")

    def refiner(path, precision):
        refined = list(precision)
        refined[tracked_index] = frozenset({"main::x"})
        return PrecisionIncrement(tuple(refined))

    verdict = cegar_loop(composite, refiner, cfa)
    assert verdict.is_true
    assert verdict.stats["refinements"] == 1


def test_cegar_pruned_resumes_and_finds_second_target():
    # Two assert sites; the refiner vetoes the first path it sees and the
    # loop must resume the same exploration and surface the other site.
    source = ("extern void __assert_fail();\n"
              "extern int __VERIFIER_nondet_int();\n"
              "int main() { int a = __VERIFIER_nondet_int();"
              " if (a == 1) { __assert_fail(); }"
              " if (a == 2) { __assert_fail(); } return 0; }")
    cfa = cfa_from_source(source)
    seen = []

    def refiner(path, precision):
        seen.append(path.signature())
        if len(seen) == 1:
            return Pruned()
        return Feasible(path_inputs(path), path)

    verdict = cegar_loop(concrete_composite(), refiner, cfa)
    assert verdict.is_false
    assert len(seen) == 2
    assert seen[0] != seen[1]
    assert verdict.stats["pruned"] == 1
    assert verdict.stats["refinements"] == 0


def test_cegar_tainting_prune_downgrades_true_to_unknown():
    cfa = load_cfa("example-unsafe.c")

    def refiner(path, precision):
        return Pruned(taints_proof=True)

    verdict = cegar_loop(concrete_composite(), refiner, cfa)
    assert verdict.status == "UNKNOWN"
    assert verdict.reason == "analysis incomplete"
    assert verdict.stats["pruned"] > 0


def test_cegar_non_tainting_prunes_keep_true():
    source = ("extern void __assert_fail();\n"
              "extern int __VERIFIER_nondet_int();\n"
              "int main() { int a = __VERIFIER_nondet_int();"
              " if (a == 1) { __assert_fail(); } return 0; }")
    cfa = cfa_from_source(source)

    def refiner(path, precision):
        return Pruned()

    verdict = cegar_loop(concrete_composite(), refiner, cfa)
    assert verdict.is_true
    assert verdict.stats["pruned"] > 0


def test_cegar_limit_hit_is_unknown():
    cfa = cfa_from_source(
        "int main() { unsigned int x = 0; while (1) { x = x + 1; }"
        " return 0; }")
    verdict = cegar_loop(concrete_composite(), lambda p, pr: None, cfa,
                         limits=Limits(max_states=30))
    assert verdict.status == "UNKNOWN"
    assert verdict.reason == "state limit"


# ---------------------------------------------------------------------------
# Composite assembly


class _FakeConfig(dict):
    pass


def test_assemble_minimal_composite():
    cfa = cfa_from_source("int main() { return 0; }")
    config = _FakeConfig({"CompositeCPA.cpas": "location, callstack, spec"})
    composite = assemble_composite(config, cfa, DEFAULT_SPEC)
    assert [c.name for c in composite.components] == \
        ["location", "callstack", "spec"]
    assert composite.stop_enabled
    result = cpa_algorithm(composite, cfa)
    assert isinstance(result, Exhausted)


def test_assemble_rejects_empty_and_unknown():
    cfa = cfa_from_source("int main() { return 0; }")
    with pytest.raises(UnknownCpaName):
        assemble_composite(_FakeConfig({}), cfa, DEFAULT_SPEC)
    with pytest.raises(UnknownCpaName):
        assemble_composite(
            _FakeConfig({"CompositeCPA.cpas": "location, callstack, wat"}),
            cfa, DEFAULT_SPEC)


def test_assemble_stop_never_disables_coverage():
    cfa = cfa_from_source("int main() { return 0; }")
    config = _FakeConfig({"CompositeCPA.cpas": "location, callstack, spec",
                          "analysis.stopOperator": "never"})
    composite = assemble_composite(config, cfa, DEFAULT_SPEC)
    assert not composite.stop_enabled
