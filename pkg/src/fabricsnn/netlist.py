"""Fabric network data model and its JSON file format.

A network is a layered feed-forward resistive netlist: input terminals feed
RC nodes through synapse edges, and every edge carries a small palette of
candidate resistors of which exactly one is selected (stitched in).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Mapping

from .errors import InvariantError, SchemaError

DEFAULT_PALETTE_OHMS = (3600.0, 33000.0, 680000.0)
DEFAULT_SUPPLY_V = 5.0
DEFAULT_THRESHOLD_V = 2.3
DEFAULT_CAPACITANCE_F = 220e-9

# The node bleed resistor is not a palette choice; it sets how strongly each
# RC node is tied to ground.  The top palette value keeps node loading light
# enough that the reference truth table is realizable.
DEFAULT_LEAK_OHMS = 680000.0

GROUNDED_ZEROS = "grounded_zeros"
FLOATING_ZEROS = "floating_zeros"
GROUNDING_MODES = (GROUNDED_ZEROS, FLOATING_ZEROS)

ROLE_INPUT = "input_terminal"
ROLE_HIDDEN = "hidden"
ROLE_OUTPUT = "output"
ROLES = (ROLE_INPUT, ROLE_HIDDEN, ROLE_OUTPUT)

STATE_CONNECTED = "connected"
STATE_DISCONNECTED = "disconnected"
EDGE_STATES = (STATE_CONNECTED, STATE_DISCONNECTED)

#: All 3-bit input patterns in ascending binary order (bit 0 = terminal A).
PATTERNS8 = ("000", "001", "010", "011", "100", "101", "110", "111")


@dataclass(frozen=True)
class ResistorPalette:
    """Ordered candidate resistances (ohms) available on one edge."""

    values: tuple[float, ...]

    def __post_init__(self):
        if not self.values:
            raise InvariantError("palette must not be empty")
        vals = tuple(float(v) for v in self.values)
        for v in vals:
            if not v > 0:
                raise InvariantError(f"palette value {v!r} is not > 0")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class NeuronNode:
    """One network node: an ideal-source input terminal or an RC node.

    Input terminals carry no leak/capacitance; RC nodes require both.
    """

    id: str
    layer: int
    role: str
    leak_resistance: float | None = None
    capacitance: float | None = None

    def __post_init__(self):
        if self.role not in ROLES:
            raise InvariantError(f"node {self.id!r}: unknown role {self.role!r}")
        if self.role == ROLE_INPUT:
            if self.layer != 0:
                raise InvariantError(f"input terminal {self.id!r} must be on layer 0")
            if self.leak_resistance is not None or self.capacitance is not None:
                raise InvariantError(
                    f"input terminal {self.id!r} must not carry leak/capacitance"
                )
        else:
            if self.layer < 1:
                raise InvariantError(f"RC node {self.id!r} must be on layer >= 1")
            if self.leak_resistance is None or not self.leak_resistance > 0:
                raise InvariantError(f"RC node {self.id!r} needs leak_resistance > 0")
            if self.capacitance is None or not self.capacitance > 0:
                raise InvariantError(f"RC node {self.id!r} needs capacitance > 0")

    @property
    def is_input(self) -> bool:
        return self.role == ROLE_INPUT


@dataclass(frozen=True)
class SynapseEdge:
    """Directed connection between consecutive layers with a resistor palette.

    Exactly one palette option is selected.  A disconnected edge contributes
    no conductance but keeps its identity for fault bookkeeping.
    """

    src: str
    dst: str
    options: ResistorPalette
    selected: int = 0
    state: str = STATE_CONNECTED

    def __post_init__(self):
        if not 0 <= self.selected < len(self.options):
            raise InvariantError(
                f"edge {self.id!r}: selected index {self.selected} out of bounds "
                f"for {len(self.options)} options"
            )
        if self.state not in EDGE_STATES:
            raise InvariantError(f"edge {self.id!r}: unknown state {self.state!r}")

    @property
    def id(self) -> str:
        return f"{self.src}->{self.dst}"

    @property
    def resistance(self) -> float:
        """Resistance of the currently selected option, ohms."""
        return self.options.values[self.selected]

    @property
    def is_connected(self) -> bool:
        return self.state == STATE_CONNECTED


@dataclass(frozen=True)
class InputPattern:
    """Logic levels applied to the input terminals, in terminal order."""

    bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        for b in bits:
            if b not in (0, 1):
                raise InvariantError(f"pattern bit {b!r} is not 0/1")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_string(cls, text: str) -> "InputPattern":
        if not text or any(c not in "01" for c in text):
            raise SchemaError(f"input pattern {text!r} must be a non-empty 0/1 string")
        return cls(tuple(int(c) for c in text))

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits)


@dataclass(frozen=True)
class TruthTable:
    """Mapping from each 3-bit input pattern to the 2 output bits (X, Y)."""

    rows: Mapping[str, str]

    def __post_init__(self):
        rows = {}
        for key, val in dict(self.rows).items():
            rows[str(key)] = str(val)
        if sorted(rows) != sorted(PATTERNS8):
            raise InvariantError(
                f"truth table must contain exactly the 8 patterns, got {sorted(rows)}"
            )
        for key, val in rows.items():
            if len(val) != 2 or any(c not in "01" for c in val):
                raise InvariantError(f"row {key!r}: outputs {val!r} must be 2 bits")
        object.__setattr__(self, "rows", {p: rows[p] for p in PATTERNS8})

    def outputs(self, pattern: str) -> tuple[int, int]:
        row = self.rows[pattern]
        return int(row[0]), int(row[1])

    def bits_array(self):
        """Rows as a list of (x, y) int pairs in PATTERNS8 order."""
        return [self.outputs(p) for p in PATTERNS8]

    @classmethod
    def from_json(cls, text: str) -> "TruthTable":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"truth table is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict) or "rows" not in doc:
            raise SchemaError('truth table document must be {"rows": {...}}')
        unknown = set(doc) - {"rows"}
        if unknown:
            raise SchemaError(f"unknown truth table fields: {sorted(unknown)}")
        return cls(doc["rows"])

    def to_json(self) -> str:
        return json.dumps({"rows": dict(self.rows)}, indent=2)


@dataclass(frozen=True)
class WeightAssignment:
    """Selected palette option per edge id; the learnable state."""

    selected: Mapping[str, int]

    def __post_init__(self):
        object.__setattr__(
            self, "selected", {str(k): int(v) for k, v in dict(self.selected).items()}
        )

    @classmethod
    def from_network(cls, network: "FabricNetwork") -> "WeightAssignment":
        return cls({e.id: e.selected for e in network.edges})

    def validate_for(self, network: "FabricNetwork") -> None:
        """Raise InvariantError unless this assignment covers the network exactly."""
        edge_ids = {e.id for e in network.edges}
        missing = edge_ids - set(self.selected)
        extra = set(self.selected) - edge_ids
        if missing:
            raise InvariantError(f"assignment missing edges: {sorted(missing)}")
        if extra:
            raise InvariantError(f"assignment names unknown edges: {sorted(extra)}")
        for edge in network.edges:
            idx = self.selected[edge.id]
            if not 0 <= idx < len(edge.options):
                raise InvariantError(
                    f"assignment for edge {edge.id!r}: index {idx} out of bounds"
                )

    @classmethod
    def from_json(cls, text: str) -> "WeightAssignment":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"assignment is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict) or "selected" not in doc:
            raise SchemaError('assignment document must be {"selected": {...}}')
        unknown = set(doc) - {"selected"}
        if unknown:
            raise SchemaError(f"unknown assignment fields: {sorted(unknown)}")
        return cls(doc["selected"])

    def to_json(self) -> str:
        return json.dumps({"selected": dict(sorted(self.selected.items()))}, indent=2)


@dataclass(frozen=True)
class FabricNetwork:
    """Layered feed-forward resistive network with RC nodes.

    Immutable after construction; derived views are cached.  Modified
    variants are produced with the ``with_*`` helpers.
    """

    nodes: tuple[NeuronNode, ...]
    edges: tuple[SynapseEdge, ...]
    supply_voltage: float = DEFAULT_SUPPLY_V
    threshold: float = DEFAULT_THRESHOLD_V
    grounding_mode: str = GROUNDED_ZEROS

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))
        if self.grounding_mode not in GROUNDING_MODES:
            raise InvariantError(f"unknown grounding mode {self.grounding_mode!r}")
        if not self.supply_voltage > 0:
            raise InvariantError("supply_voltage must be > 0")
        seen = set()
        for node in self.nodes:
            if node.id in seen:
                raise InvariantError(f"duplicate node id {node.id!r}")
            seen.add(node.id)
        seen_edges = set()
        for edge in self.edges:
            if edge.id in seen_edges:
                raise InvariantError(f"duplicate edge {edge.id!r}")
            seen_edges.add(edge.id)

    # -- derived views -----------------------------------------------------

    @cached_property
    def node_by_id(self) -> dict[str, NeuronNode]:
        return {n.id: n for n in self.nodes}

    @cached_property
    def edge_by_id(self) -> dict[str, SynapseEdge]:
        return {e.id: e for e in self.edges}

    @cached_property
    def input_terminals(self) -> tuple[NeuronNode, ...]:
        """Input terminals in declaration order; defines pattern bit order."""
        return tuple(n for n in self.nodes if n.is_input)

    @cached_property
    def rc_nodes(self) -> tuple[NeuronNode, ...]:
        """RC nodes ordered by (layer, id); defines the unknown ordering."""
        return tuple(sorted((n for n in self.nodes if not n.is_input),
                            key=lambda n: (n.layer, n.id)))

    @cached_property
    def output_nodes(self) -> tuple[NeuronNode, ...]:
        return tuple(sorted((n for n in self.nodes if n.role == ROLE_OUTPUT),
                            key=lambda n: n.id))

    @cached_property
    def max_layer(self) -> int:
        return max(n.layer for n in self.nodes)

    @cached_property
    def measured_nodes(self) -> tuple[NeuronNode, ...]:
        """RC nodes on the top two layers: the externally observable ones."""
        lo = max(1, self.max_layer - 1)
        return tuple(n for n in self.rc_nodes if n.layer >= lo)

    def layer_sizes(self) -> list[int]:
        sizes: dict[int, int] = {}
        for node in self.nodes:
            sizes[node.layer] = sizes.get(node.layer, 0) + 1
        return [sizes[k] for k in sorted(sizes)]

    def edges_into(self, node_id: str) -> tuple[SynapseEdge, ...]:
        return tuple(e for e in self.edges if e.dst == node_id)

    def edges_out_of(self, node_id: str) -> tuple[SynapseEdge, ...]:
        return tuple(e for e in self.edges if e.src == node_id)

    def palette_slot_count(self) -> int:
        return sum(len(e.options) for e in self.edges)

    # -- modified copies ---------------------------------------------------

    def with_assignment(self, assignment: WeightAssignment) -> "FabricNetwork":
        assignment.validate_for(self)
        edges = tuple(replace(e, selected=assignment.selected[e.id]) for e in self.edges)
        return replace(self, edges=edges)

    def with_disconnected(self, edge_ids: Iterable[str]) -> "FabricNetwork":
        cut = set(edge_ids)
        unknown = cut - {e.id for e in self.edges}
        if unknown:
            raise InvariantError(f"unknown edges to disconnect: {sorted(unknown)}")
        edges = tuple(
            replace(e, state=STATE_DISCONNECTED) if e.id in cut else e
            for e in self.edges
        )
        return replace(self, edges=edges)

    def with_edge_resistances(self, ohms_by_edge: Mapping[str, float]) -> "FabricNetwork":
        """Copy with the selected slot of named edges replaced by new values."""
        edges = []
        for edge in self.edges:
            if edge.id in ohms_by_edge:
                vals = list(edge.options.values)
                vals[edge.selected] = float(ohms_by_edge[edge.id])
                edge = replace(edge, options=ResistorPalette(tuple(vals)))
            edges.append(edge)
        return replace(self, edges=tuple(edges))


def build_reference_network(
    leak_resistance: float = DEFAULT_LEAK_OHMS,
    palette: tuple[float, ...] = DEFAULT_PALETTE_OHMS,
    supply_voltage: float = DEFAULT_SUPPLY_V,
    threshold: float = DEFAULT_THRESHOLD_V,
    capacitance: float = DEFAULT_CAPACITANCE_F,
    grounding_mode: str = GROUNDED_ZEROS,
) -> FabricNetwork:
    """Build the 3-4-4-2 reference network.

    Three input terminals (A, B, C) fan into four first-layer RC nodes
    (N1-N4), which fan into four second-layer nodes (N5-N8), which feed the
    two output nodes (X, Y).  Every edge carries the full resistor palette
    with option 0 selected, for 36 edges and 108 palette slots in total.
    """
    layers = [["A", "B", "C"], ["N1", "N2", "N3", "N4"],
              ["N5", "N6", "N7", "N8"], ["X", "Y"]]
    nodes = [NeuronNode(id=i, layer=0, role=ROLE_INPUT) for i in layers[0]]
    for depth, ids in enumerate(layers[1:], start=1):
        role = ROLE_OUTPUT if depth == 3 else ROLE_HIDDEN
        nodes.extend(
            NeuronNode(id=i, layer=depth, role=role,
                       leak_resistance=leak_resistance, capacitance=capacitance)
            for i in ids
        )
    pal = ResistorPalette(tuple(palette))
    edges = [
        SynapseEdge(src=src, dst=dst, options=pal)
        for depth in range(3)
        for src in layers[depth]
        for dst in layers[depth + 1]
    ]
    return FabricNetwork(
        nodes=tuple(nodes), edges=tuple(edges),
        supply_voltage=supply_voltage, threshold=threshold,
        grounding_mode=grounding_mode,
    )


# -- serialization ---------------------------------------------------------

_NETWORK_FIELDS = {"supply_voltage", "threshold", "grounding_mode", "nodes", "edges"}
_NODE_FIELDS = {"id", "layer", "role", "leak_resistance", "capacitance"}
_EDGE_FIELDS = {"from", "to", "options", "selected", "state"}


def serialize_network(network: FabricNetwork) -> str:
    doc = {
        "supply_voltage": network.supply_voltage,
        "threshold": network.threshold,
        "grounding_mode": network.grounding_mode,
        "nodes": [
            {
                "id": n.id,
                "layer": n.layer,
                "role": n.role,
                "leak_resistance": n.leak_resistance,
                "capacitance": n.capacitance,
            }
            for n in network.nodes
        ],
        "edges": [
            {
                "from": e.src,
                "to": e.dst,
                "options": list(e.options.values),
                "selected": e.selected,
                "state": e.state,
            }
            for e in network.edges
        ],
    }
    return json.dumps(doc, indent=2)


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise SchemaError(message)


def parse_network(document: str) -> FabricNetwork:
    """Parse the JSON network format; unknown fields are rejected.

    Schema problems raise SchemaError; structurally valid documents that
    break a network invariant raise InvariantError naming the element.
    """
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"network document is not valid JSON: {exc}") from exc
    _require(isinstance(doc, dict), "network document must be a JSON object")
    unknown = set(doc) - _NETWORK_FIELDS
    _require(not unknown, f"unknown network fields: {sorted(unknown)}")
    _require("nodes" in doc and "edges" in doc, "network needs 'nodes' and 'edges'")

    nodes = []
    for i, entry in enumerate(doc["nodes"]):
        _require(isinstance(entry, dict), f"nodes[{i}] must be an object")
        unknown = set(entry) - _NODE_FIELDS
        _require(not unknown, f"nodes[{i}]: unknown fields {sorted(unknown)}")
        for key in ("id", "layer", "role"):
            _require(key in entry, f"nodes[{i}]: missing field {key!r}")
        _require(isinstance(entry["id"], str), f"nodes[{i}]: 'id' must be a string")
        _require(isinstance(entry["layer"], int) and not isinstance(entry["layer"], bool),
                 f"node {entry['id']!r}: 'layer' must be an integer")
        leak = entry.get("leak_resistance")
        cap = entry.get("capacitance")
        _require(leak is None or isinstance(leak, (int, float)),
                 f"node {entry['id']!r}: 'leak_resistance' must be a number or null")
        _require(cap is None or isinstance(cap, (int, float)),
                 f"node {entry['id']!r}: 'capacitance' must be a number or null")
        nodes.append(
            NeuronNode(
                id=entry["id"], layer=entry["layer"], role=entry["role"],
                leak_resistance=None if leak is None else float(leak),
                capacitance=None if cap is None else float(cap),
            )
        )

    node_ids = {n.id for n in nodes}
    edges = []
    for i, entry in enumerate(doc["edges"]):
        _require(isinstance(entry, dict), f"edges[{i}] must be an object")
        unknown = set(entry) - _EDGE_FIELDS
        _require(not unknown, f"edges[{i}]: unknown fields {sorted(unknown)}")
        for key in ("from", "to", "options"):
            _require(key in entry, f"edges[{i}]: missing field {key!r}")
        _require(isinstance(entry["options"], list) and entry["options"],
                 f"edges[{i}]: 'options' must be a non-empty list")
        for v in entry["options"]:
            _require(isinstance(v, (int, float)),
                     f"edge {entry['from']}->{entry['to']}: options must be numbers")
        selected = entry.get("selected", 0)
        _require(isinstance(selected, int) and not isinstance(selected, bool),
                 f"edge {entry['from']}->{entry['to']}: 'selected' must be an integer")
        if entry["from"] not in node_ids or entry["to"] not in node_ids:
            raise InvariantError(
                f"edge {entry['from']}->{entry['to']} references an unknown node"
            )
        edges.append(
            SynapseEdge(
                src=entry["from"], dst=entry["to"],
                options=ResistorPalette(tuple(float(v) for v in entry["options"])),
                selected=selected,
                state=entry.get("state", STATE_CONNECTED),
            )
        )

    network = FabricNetwork(
        nodes=tuple(nodes), edges=tuple(edges),
        supply_voltage=float(doc.get("supply_voltage", DEFAULT_SUPPLY_V)),
        threshold=float(doc.get("threshold", DEFAULT_THRESHOLD_V)),
        grounding_mode=doc.get("grounding_mode", GROUNDED_ZEROS),
    )
    violations = validate(network)
    if violations:
        raise InvariantError("; ".join(violations))
    return network


def validate(network: FabricNetwork, expect_reference: bool = False) -> list[str]:
    """Collect invariant violations; empty list means the network is valid.

    With expect_reference=True the structural counts of the reference
    topology (10 RC nodes, 36 edges, 108 palette slots, layers 3-4-4-2) are
    also enforced.
    """
    violations = []
    ids = network.node_by_id
    for edge in network.edges:
        src = ids.get(edge.src)
        dst = ids.get(edge.dst)
        if src is None or dst is None:
            violations.append(f"edge {edge.id}: dangling endpoint")
            continue
        if dst.layer != src.layer + 1:
            violations.append(
                f"edge {edge.id}: connects layer {src.layer} to layer {dst.layer}, "
                "expected consecutive layers"
            )
        if dst.is_input:
            violations.append(f"edge {edge.id}: ends on an input terminal")
    if not network.input_terminals:
        violations.append("network has no input terminals")
    if not network.output_nodes:
        violations.append("network has no output nodes")

    # Reachability over connected edges from any input to every output.
    if network.input_terminals and network.output_nodes:
        frontier = {n.id for n in network.input_terminals}
        reached = set(frontier)
        while frontier:
            nxt = {
                e.dst
                for e in network.edges
                if e.is_connected and e.src in frontier and e.dst not in reached
            }
            reached |= nxt
            frontier = nxt
        for out in network.output_nodes:
            if out.id not in reached:
                violations.append(f"output {out.id} is not reachable from the inputs")

    if expect_reference:
        n_rc = len(network.rc_nodes)
        if n_rc != 10:
            violations.append(f"reference network must have 10 RC nodes, found {n_rc}")
        if len(network.edges) != 36:
            violations.append(
                f"reference network must have 36 edges, found {len(network.edges)}"
            )
        slots = network.palette_slot_count()
        if slots != 108:
            violations.append(
                f"reference network must have 108 palette slots, found {slots}"
            )
        if network.layer_sizes() != [3, 4, 4, 2]:
            violations.append(
                f"reference layer sizes must be [3, 4, 4, 2], found {network.layer_sizes()}"
            )
    return violations
