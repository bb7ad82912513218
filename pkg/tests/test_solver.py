import math

import numpy as np
import pytest

from netgen import random_network

from fabricsnn.errors import SingularSystemError
from fabricsnn.netlist import (
    FLOATING_ZEROS,
    FabricNetwork,
    InputPattern,
    NeuronNode,
    ResistorPalette,
    SynapseEdge,
    WeightAssignment,
)
from fabricsnn.solver import (
    all_patterns,
    assemble_dc_system,
    evaluate_truth_table,
    readout,
    solve_dc,
    solve_pattern,
    solve_transient,
    time_constants,
)

# Two-resistor divider oracle: 5 V through 3.6k into a 33k leak.
DIVIDER_V = 5.0 * 33000.0 / (3600.0 + 33000.0)


def single_node_network(leak=33000.0, source_r=3600.0):
    return FabricNetwork(
        nodes=(
            NeuronNode("A", 0, "input_terminal"),
            NeuronNode("X", 1, "output", leak_resistance=leak, capacitance=220e-9),
        ),
        edges=(SynapseEdge("A", "X", ResistorPalette((source_r,))),),
    )


def test_single_node_system_entries():
    system = assemble_dc_system(single_node_network(), InputPattern((1,)))
    assert system.unknown_ids == ("X",)
    assert system.conductance[0, 0] == pytest.approx(1 / 3600 + 1 / 33000, rel=1e-15)
    assert system.injection[0] == pytest.approx(5.0 / 3600, rel=1e-15)


def test_single_node_divider_voltage():
    solution = solve_pattern(single_node_network(), InputPattern((1,)))
    assert solution.voltages["X"] == pytest.approx(DIVIDER_V, abs=1e-12)
    assert solution.output_bits == (1,)


def test_reference_dimension_grounded(reference_network):
    system = assemble_dc_system(
        reference_network, InputPattern.from_string("101")
    )
    assert len(system.unknown_ids) == 10
    assert system.conductance.shape == (10, 10)


def test_pattern_000_all_zero(reference_network):
    system = assemble_dc_system(reference_network, InputPattern.from_string("000"))
    assert np.all(system.injection == 0.0)
    solution = solve_dc(system)
    assert all(v == pytest.approx(0.0, abs=1e-15) for v in solution.voltages.values())
    assert solution.output_bits == (0, 0)


def test_system_matrix_shape_properties():
    rng = np.random.default_rng(5)
    for _ in range(20):
        net = random_network(rng)
        pattern = InputPattern(tuple(rng.integers(0, 2, len(net.input_terminals))))
        system = assemble_dc_system(net, pattern)
        G = system.conductance
        assert np.allclose(G, G.T, rtol=0, atol=0)
        off = G - np.diag(np.diag(G))
        assert np.all(off <= 0)
        assert np.all(np.diag(G) > 0)
        # strict dominance holds in grounded mode (every node leaks or sees a source)
        assert np.all(np.diag(G) - np.abs(off).sum(axis=1) > 0)


def test_readout_threshold_ties():
    solution = solve_pattern(single_node_network(), InputPattern((1,)))
    assert readout(solution, DIVIDER_V) == (1,)          # exactly at threshold -> 1
    assert readout(solution, DIVIDER_V + 1e-4) == (0,)
    assert readout(solution, 0.0) == (1,)


def test_voltage_bounds_random_networks():
    rng = np.random.default_rng(11)
    for _ in range(25):
        mode = "grounded_zeros" if rng.random() < 0.5 else FLOATING_ZEROS
        net = random_network(rng, grounding_mode=mode)
        for pattern in all_patterns(len(net.input_terminals)):
            solution = solve_pattern(net, pattern)
            for v in solution.voltages.values():
                assert -1e-9 <= v <= net.supply_voltage + 1e-9


def test_superposition_grounded(reference_network):
    rng = np.random.default_rng(3)
    net = reference_network
    selection = {e.id: int(rng.integers(0, 3)) for e in net.edges}
    net = net.with_assignment(WeightAssignment(selection))
    units = {}
    for i, unit in enumerate(("100", "010", "001")):
        units[i] = solve_pattern(net, InputPattern.from_string(unit)).voltages
    for pattern in all_patterns(3):
        combined = solve_pattern(net, pattern).voltages
        for node in combined:
            expect = sum(units[i][node] for i in range(3) if pattern.bits[i])
            assert combined[node] == pytest.approx(expect, abs=1e-9)


def test_realized_tables_monotone(reference_network):
    rng = np.random.default_rng(17)
    for _ in range(10):
        selection = {e.id: int(rng.integers(0, 3)) for e in reference_network.edges}
        evaluation = evaluate_truth_table(
            reference_network, WeightAssignment(selection)
        )
        rows = evaluation.table.rows
        assert rows["000"] == "00"
        for p in rows:
            for q in rows:
                if all(int(a) <= int(b) for a, b in zip(p, q)):
                    assert all(
                        int(a) <= int(b) for a, b in zip(rows[p], rows[q])
                    ), (p, q, rows[p], rows[q])


def test_disconnected_equals_deleted():
    rng = np.random.default_rng(23)
    for _ in range(10):
        net = random_network(rng)
        victim = net.edges[int(rng.integers(0, len(net.edges)))]
        cut = net.with_disconnected([victim.id])
        deleted = FabricNetwork(
            nodes=net.nodes,
            edges=tuple(e for e in net.edges if e.id != victim.id),
            supply_voltage=net.supply_voltage,
            threshold=net.threshold,
            grounding_mode=net.grounding_mode,
        )
        for pattern in all_patterns(len(net.input_terminals)):
            v_cut = solve_pattern(cut, pattern).voltages
            v_del = solve_pattern(deleted, pattern).voltages
            for node in v_cut:
                assert v_cut[node] == pytest.approx(v_del[node], abs=1e-12)


def test_floating_mode_isolated_terminal_is_singular():
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
        assemble_dc_system(net, InputPattern((1, 0)))


def test_floating_terminal_tracks_driven_node():
    net = FabricNetwork(
        nodes=(
            NeuronNode("A", 0, "input_terminal"),
            NeuronNode("B", 0, "input_terminal"),
            NeuronNode("X", 1, "output", leak_resistance=33000.0,
                       capacitance=220e-9),
        ),
        edges=(SynapseEdge("A", "X", ResistorPalette((3600.0,))),
               SynapseEdge("B", "X", ResistorPalette((10000.0,)))),
        grounding_mode=FLOATING_ZEROS,
    )
    solution = solve_pattern(net, InputPattern((1, 0)))
    # no current can flow into the open terminal, so it floats at V(X)
    assert solution.voltages["B"] == pytest.approx(solution.voltages["X"], abs=1e-12)


# -- transient ----------------------------------------------------------------


def test_transient_matches_closed_form_rc():
    net = single_node_network()
    tau = 1.0 / (1 / 3600 + 1 / 33000) * 220e-9
    t_star = -tau * math.log(1 - 2.3 / DIVIDER_V)
    trace = solve_transient(net, InputPattern((1,)), t_end=10 * tau, dt=tau / 100)
    model = DIVIDER_V * (1.0 - np.exp(-trace.times / tau))
    rel = np.max(np.abs(trace.voltages["X"] - model)) / DIVIDER_V
    assert rel < 1e-3
    assert trace.crossings["X"] == pytest.approx(t_star, rel=5e-3)


def test_transient_zero_pattern_flat(reference_network):
    taus = time_constants(reference_network)
    trace = solve_transient(
        reference_network, InputPattern.from_string("000"),
        t_end=float(taus[0]), dt=float(taus[0]) / 20,
    )
    for node, series in trace.voltages.items():
        assert np.all(series == 0.0), node
    assert trace.crossings["X"] is None
    assert trace.crossings["Y"] is None


def test_transient_converges_to_dc(reference_network, shipped_weights):
    net = reference_network.with_assignment(shipped_weights)
    taus = time_constants(net)
    # e^-10 on a 5 V scale is ~2e-4, so the 1e-4 budget needs ~12 tau.
    t_end = 12.0 * float(taus[0])
    for key in ("001", "101", "111"):
        pattern = InputPattern.from_string(key)
        trace = solve_transient(net, pattern, t_end=t_end, dt=t_end / 400)
        dc = solve_pattern(net, pattern)
        for node, value in dc.voltages.items():
            assert abs(trace.voltages[node][-1] - value) < 1e-4, (key, node)


def test_transient_crossing_interpolation_beats_grid(reference_network,
                                                     shipped_weights):
    net = reference_network.with_assignment(shipped_weights)
    taus = time_constants(net)
    dt = float(taus[0]) / 50
    trace = solve_transient(net, InputPattern.from_string("111"),
                            t_end=12 * float(taus[0]), dt=dt)
    t_cross = trace.crossings["X"]
    assert t_cross is not None
    k = int(np.searchsorted(trace.times, t_cross))
    assert trace.voltages["X"][k - 1] < net.threshold <= trace.voltages["X"][k]


def test_transient_reset_flag():
    net = single_node_network()
    tau = 1.0 / (1 / 3600 + 1 / 33000) * 220e-9
    trace = solve_transient(net, InputPattern((1,)), t_end=5 * tau, dt=tau / 50,
                            reset_on_crossing=True)
    assert trace.crossings["X"] is not None
    peak = float(np.max(trace.voltages["X"]))
    assert peak < DIVIDER_V  # never finishes charging; it fires and resets


def test_transient_rejects_bad_grid(reference_network):
    with pytest.raises(ValueError):
        solve_transient(reference_network, InputPattern.from_string("111"),
                        t_end=1e-3, dt=0.0)
    with pytest.raises(ValueError):
        solve_transient(reference_network, InputPattern.from_string("111"),
                        t_end=1e-9, dt=1e-3)
