import numpy as np
import pytest

from netgen import random_network

from fabricsnn.errors import ConvergenceError, SearchSpaceError, SingularSystemError
from fabricsnn.netlist import (
    FLOATING_ZEROS,
    FabricNetwork,
    InputPattern,
    NeuronNode,
    ResistorPalette,
    SynapseEdge,
    TruthTable,
    WeightAssignment,
)
from fabricsnn.oracle import exhaustive_assignments, relax_solve
from fabricsnn.solver import all_patterns, evaluate_truth_table, solve_pattern

DIVIDER_V = 5.0 * 33000.0 / (3600.0 + 33000.0)


def divider_network():
    return FabricNetwork(
        nodes=(
            NeuronNode("A", 0, "input_terminal"),
            NeuronNode("X", 1, "output", leak_resistance=33000.0,
                       capacitance=220e-9),
        ),
        edges=(SynapseEdge("A", "X", ResistorPalette((3600.0,))),),
    )


def test_divider_within_tolerance():
    report = relax_solve(divider_network(), InputPattern((1,)), tol=1e-12,
                         max_iters=100)
    assert report.voltages["X"] == pytest.approx(DIVIDER_V, abs=1e-11)
    assert report.iterations < 100
    assert report.max_update < 1e-12


def test_zero_pattern_converges_immediately(reference_network):
    report = relax_solve(reference_network, InputPattern.from_string("000"))
    assert report.iterations == 1
    assert all(v == 0.0 for v in report.voltages.values())


def test_agrees_with_direct_solve_on_reference(reference_network, shipped_weights):
    net = reference_network.with_assignment(shipped_weights)
    for pattern in all_patterns(3):
        direct = solve_pattern(net, pattern)
        relaxed = relax_solve(net, pattern)
        worst = max(
            abs(direct.voltages[n] - relaxed.voltages[n]) for n in direct.voltages
        )
        assert worst <= 1e-9, (str(pattern), worst)


def test_agrees_on_random_floating_networks():
    rng = np.random.default_rng(41)
    for _ in range(15):
        net = random_network(rng, max_nodes=10, grounding_mode=FLOATING_ZEROS)
        for pattern in all_patterns(len(net.input_terminals)):
            direct = solve_pattern(net, pattern)
            relaxed = relax_solve(net, pattern)
            for node, v in direct.voltages.items():
                assert abs(v - relaxed.voltages[node]) <= 1e-9


def test_nonconvergence_carries_report(reference_network):
    with pytest.raises(ConvergenceError) as err:
        relax_solve(reference_network, InputPattern.from_string("111"),
                    tol=1e-13, max_iters=2)
    assert err.value.report is not None
    assert err.value.report.iterations == 2


def test_isolated_node_detected():
    net = FabricNetwork(
        nodes=(
            NeuronNode("A", 0, "input_terminal"),
            NeuronNode("B", 0, "input_terminal"),
            NeuronNode("X", 1, "output", leak_resistance=33000.0,
                       capacitance=220e-9),
        ),
        edges=(SynapseEdge("A", "X", ResistorPalette((3600.0,))),
               SynapseEdge("B", "X", ResistorPalette((3600.0,)),
                           state="disconnected")),
        grounding_mode=FLOATING_ZEROS,
    )
    with pytest.raises(SingularSystemError, match="B"):
        relax_solve(net, InputPattern((1, 0)))


# -- exhaustive enumeration -----------------------------------------------------


def one_output_subnet():
    """3 inputs straight into one node pair (X, Y) so 27-way scans are cheap."""
    nodes = [NeuronNode(t, 0, "input_terminal") for t in "ABC"]
    nodes += [
        NeuronNode("X", 1, "output", leak_resistance=680000.0, capacitance=220e-9),
        NeuronNode("Y", 1, "output", leak_resistance=680000.0, capacitance=220e-9),
    ]
    palette = ResistorPalette((3600.0, 33000.0, 680000.0))
    edges = [SynapseEdge(t, "X", palette) for t in "ABC"]
    edges += [SynapseEdge(t, "Y", palette) for t in "ABC"]
    return FabricNetwork(nodes=tuple(nodes), edges=tuple(edges))


def test_exhaustive_enumerates_all_combinations(target_table):
    net = one_output_subnet()
    result = exhaustive_assignments(
        net, ["A->X", "B->X", "C->X"], target_table
    )
    assert result.evaluated == 27


def test_exhaustive_empty_subset_returns_fixed(reference_network, target_table):
    fixed = WeightAssignment.from_network(reference_network)
    result = exhaustive_assignments(reference_network, [], target_table, fixed)
    assert result.evaluated == 1
    assert result.assignment == fixed
    realized = evaluate_truth_table(reference_network, fixed).table
    mism = sum(
        (a != b)
        for p in realized.rows
        for a, b in zip(realized.rows[p], target_table.rows[p])
    )
    assert result.error == mism


def test_exhaustive_self_consistency(reference_network):
    rng = np.random.default_rng(7)
    fixed = WeightAssignment(
        {e.id: int(rng.integers(0, 3)) for e in reference_network.edges}
    )
    realized = evaluate_truth_table(reference_network, fixed).table
    result = exhaustive_assignments(
        reference_network, ["A->N1", "B->N1"], realized, fixed
    )
    assert result.error == 0


def test_exhaustive_guard():
    net = one_output_subnet()
    with pytest.raises(SearchSpaceError):
        exhaustive_assignments(
            net, [e.id for e in net.edges], TruthTable(
                {f"{i:03b}": "00" for i in range(8)}
            ),
            guard=100,
        )


def test_exhaustive_never_beaten_by_sampled_candidates(target_table):
    net = one_output_subnet()
    subset = [e.id for e in net.edges]
    best = exhaustive_assignments(net, subset, target_table)
    rng = np.random.default_rng(13)
    from fabricsnn.learning import TableEvaluator

    ev = TableEvaluator(net, target_table)
    for _ in range(50):
        selection = np.array([rng.integers(0, 3) for _ in subset], dtype=np.int64)
        error, margin = ev.score(selection)
        assert (best.error, -best.min_margin) <= (error, -margin)
