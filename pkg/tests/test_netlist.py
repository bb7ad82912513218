import json

import pytest

from fabricsnn.errors import InvariantError, SchemaError
from fabricsnn.netlist import (
    FabricNetwork,
    InputPattern,
    NeuronNode,
    ResistorPalette,
    SynapseEdge,
    TruthTable,
    WeightAssignment,
    build_reference_network,
    parse_network,
    serialize_network,
    validate,
)


def test_reference_structural_counts(reference_network):
    net = reference_network
    assert len(net.rc_nodes) == 10
    assert len(net.edges) == 36
    assert net.palette_slot_count() == 108
    assert net.layer_sizes() == [3, 4, 4, 2]
    assert [n.id for n in net.input_terminals] == ["A", "B", "C"]
    assert [n.id for n in net.output_nodes] == ["X", "Y"]


def test_reference_defaults(reference_network):
    net = reference_network
    assert net.supply_voltage == 5.0
    assert net.threshold == 2.3
    assert net.grounding_mode == "grounded_zeros"
    for edge in net.edges:
        assert edge.options.values == (3600.0, 33000.0, 680000.0)
        assert edge.selected == 0
        assert edge.is_connected
    for node in net.rc_nodes:
        assert node.capacitance == 220e-9
        assert node.leak_resistance > 0


def test_reference_fan_in(reference_network):
    net = reference_network
    for node_id in ("N1", "N2", "N3", "N4"):
        assert len(net.edges_into(node_id)) == 3
    for node_id in ("N5", "N6", "N7", "N8", "X", "Y"):
        assert len(net.edges_into(node_id)) == 4


def test_validate_reference_clean(reference_network):
    assert validate(reference_network, expect_reference=True) == []


def test_roundtrip_identity(reference_network):
    text = serialize_network(reference_network)
    assert parse_network(text) == reference_network


def test_roundtrip_preserves_modifications(reference_network):
    net = reference_network.with_disconnected(["A->N1"])
    assignment = WeightAssignment(
        {e.id: (1 if e.id == "B->N2" else 0) for e in net.edges}
    )
    net = net.with_assignment(assignment)
    assert parse_network(serialize_network(net)) == net


def test_parse_rejects_unknown_fields(reference_network):
    doc = json.loads(serialize_network(reference_network))
    doc["color"] = "blue"
    with pytest.raises(SchemaError, match="color"):
        parse_network(json.dumps(doc))


def test_parse_rejects_bad_selected_index(reference_network):
    doc = json.loads(serialize_network(reference_network))
    doc["edges"][0]["selected"] = 3
    with pytest.raises(InvariantError, match="selected index 3"):
        parse_network(json.dumps(doc))


def test_parse_defaults_threshold(reference_network):
    doc = json.loads(serialize_network(reference_network))
    del doc["threshold"]
    assert parse_network(json.dumps(doc)).threshold == 2.3


def test_parse_names_dangling_edge():
    doc = {
        "nodes": [
            {"id": "A", "layer": 0, "role": "input_terminal",
             "leak_resistance": None, "capacitance": None},
            {"id": "X", "layer": 1, "role": "output",
             "leak_resistance": 33000.0, "capacitance": 220e-9},
        ],
        "edges": [{"from": "A", "to": "Z", "options": [3600.0]}],
    }
    with pytest.raises(InvariantError, match="A->Z"):
        parse_network(json.dumps(doc))


def test_validate_flags_layer_skip():
    nodes = (
        NeuronNode("A", 0, "input_terminal"),
        NeuronNode("H", 1, "hidden", leak_resistance=1e4, capacitance=220e-9),
        NeuronNode("X", 2, "output", leak_resistance=1e4, capacitance=220e-9),
    )
    edges = (
        SynapseEdge("A", "H", ResistorPalette((3600.0,))),
        SynapseEdge("H", "X", ResistorPalette((3600.0,))),
        SynapseEdge("A", "X", ResistorPalette((3600.0,))),
    )
    violations = validate(FabricNetwork(nodes=nodes, edges=edges))
    assert any("A->X" in v and "consecutive" in v for v in violations)


def test_validate_counts_against_reference_claim(reference_network):
    smaller = FabricNetwork(
        nodes=reference_network.nodes,
        edges=reference_network.edges[:-1],
        supply_voltage=reference_network.supply_voltage,
        threshold=reference_network.threshold,
        grounding_mode=reference_network.grounding_mode,
    )
    violations = validate(smaller, expect_reference=True)
    assert any("36 edges" in v and "35" in v for v in violations)
    assert any("108" in v for v in violations)


def test_palette_invariants():
    with pytest.raises(InvariantError):
        ResistorPalette(())
    with pytest.raises(InvariantError):
        ResistorPalette((3600.0, -1.0))


def test_node_invariants():
    with pytest.raises(InvariantError):
        NeuronNode("A", 0, "input_terminal", leak_resistance=1e4)
    with pytest.raises(InvariantError):
        NeuronNode("H", 1, "hidden", leak_resistance=None, capacitance=220e-9)
    with pytest.raises(InvariantError):
        NeuronNode("H", 1, "nonsense", leak_resistance=1e4, capacitance=220e-9)


def test_pattern_parsing():
    assert InputPattern.from_string("010").bits == (0, 1, 0)
    assert str(InputPattern((1, 1, 1))) == "111"
    with pytest.raises(SchemaError):
        InputPattern.from_string("01x")
    with pytest.raises(SchemaError):
        InputPattern.from_string("")


def test_truth_table_requires_all_rows():
    rows = {f"{i:03b}": "00" for i in range(8)}
    TruthTable(rows)
    with pytest.raises(InvariantError):
        TruthTable({k: v for k, v in rows.items() if k != "101"})
    with pytest.raises(InvariantError):
        TruthTable({**rows, "000": "0"})


def test_truth_table_json_roundtrip(target_table):
    assert TruthTable.from_json(target_table.to_json()) == target_table
    with pytest.raises(SchemaError):
        TruthTable.from_json('{"rows": {}, "extra": 1}')


def test_assignment_validation(reference_network):
    good = WeightAssignment.from_network(reference_network)
    good.validate_for(reference_network)

    missing = dict(good.selected)
    del missing["A->N1"]
    with pytest.raises(InvariantError, match="missing"):
        WeightAssignment(missing).validate_for(reference_network)

    bad = dict(good.selected)
    bad["A->N1"] = 7
    with pytest.raises(InvariantError, match="out of bounds"):
        WeightAssignment(bad).validate_for(reference_network)


def test_with_disconnected_is_pure(reference_network):
    cut = reference_network.with_disconnected(["A->N1", "B->N2"])
    assert all(e.is_connected for e in reference_network.edges)
    off = {e.id for e in cut.edges if not e.is_connected}
    assert off == {"A->N1", "B->N2"}
    with pytest.raises(InvariantError, match="unknown"):
        reference_network.with_disconnected(["A->Q"])
