"""Fault injection: edge and patch disconnects with before/after reporting.

Faults are applied to pure copies of the network; each spec in a campaign is
evaluated independently.  A multi-edge fault is one spec with several
targets.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import FabricError, InvariantError, SchemaError
from .netlist import (
    PATTERNS8,
    ROLE_HIDDEN,
    FabricNetwork,
    InputPattern,
    TruthTable,
    WeightAssignment,
)
from .solver import solve_pattern

KIND_EDGE = "edge_disconnect"
KIND_PATCH = "patch_disconnect"
KIND_LINK = "layer_link_disconnect"
FAULT_KINDS = (KIND_EDGE, KIND_PATCH, KIND_LINK)

#: Baseline voltages below this report an absolute delta instead of a percent.
NEAR_ZERO_V = 1e-3


@dataclass(frozen=True)
class FaultSpec:
    """One disconnection experiment.

    Targets are edge ids ("A->N1", optionally "A->N1#opt0" to assert which
    palette slot is stitched in) for edge_disconnect, or node ids for the
    patch/link kinds.  A patch disconnect opens the snap feeding the patch,
    cutting every edge into the node; a layer-link disconnect opens the snap
    toward the next layer, cutting every edge out of the node.
    """

    kind: str
    targets: tuple[str, ...]
    label: str = ""

    def __post_init__(self):
        if self.kind not in FAULT_KINDS:
            raise InvariantError(f"unknown fault kind {self.kind!r}")
        object.__setattr__(self, "targets", tuple(self.targets))
        if not self.targets:
            raise InvariantError("fault spec needs at least one target")

    @property
    def name(self) -> str:
        return self.label or f"{self.kind}:{'+'.join(self.targets)}"


@dataclass(frozen=True)
class FaultZone:
    """Named group of fault specs (e.g. one physical surface region)."""

    name: str
    faults: tuple[FaultSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "faults", tuple(self.faults))
        if not self.faults:
            raise InvariantError(f"fault zone {self.name!r} is empty")


def resolve_fault_edges(network: FabricNetwork, spec: FaultSpec) -> tuple[str, ...]:
    """Map a fault spec to the edge ids it disconnects."""
    edge_ids: list[str] = []
    if spec.kind == KIND_EDGE:
        for target in spec.targets:
            edge_id, _, opt = target.partition("#")
            edge = network.edge_by_id.get(edge_id)
            if edge is None:
                raise InvariantError(f"fault targets unknown edge {edge_id!r}")
            if opt:
                if not opt.startswith("opt"):
                    raise InvariantError(
                        f"fault target {target!r}: expected '#opt<index>'"
                    )
                want = int(opt[3:])
                if edge.selected != want:
                    raise InvariantError(
                        f"fault target {target!r}: edge has option {edge.selected} "
                        f"stitched in, not option {want}"
                    )
            edge_ids.append(edge_id)
        return tuple(edge_ids)

    for target in spec.targets:
        node = network.node_by_id.get(target)
        if node is None:
            raise InvariantError(f"fault targets unknown node {target!r}")
        if spec.kind == KIND_PATCH:
            if node.role != ROLE_HIDDEN:
                raise InvariantError(
                    f"patch disconnect target {target!r} must be a hidden node"
                )
            edges = network.edges_into(target)
        else:
            edges = network.edges_out_of(target)
            if not edges:
                raise InvariantError(
                    f"layer link target {target!r} has no outgoing edges"
                )
        edge_ids.extend(e.id for e in edges)
    return tuple(edge_ids)


def apply_fault(network: FabricNetwork, spec: FaultSpec) -> FabricNetwork:
    """Return a copy with the spec's edges disconnected; the input is untouched."""
    return network.with_disconnected(resolve_fault_edges(network, spec))


@dataclass(frozen=True)
class FaultCell:
    """One measured node under one pattern, before and after a fault."""

    pattern: str
    node: str
    v_base: float
    v_fault: float
    delta_pct: float | None  # None when the baseline is below NEAR_ZERO_V
    delta_abs: float

    @property
    def near_zero_baseline(self) -> bool:
        return self.delta_pct is None


@dataclass(frozen=True)
class FaultEntry:
    """Outcome of one fault spec across all 8 input patterns."""

    spec: FaultSpec
    cut_edges: tuple[str, ...]
    table: TruthTable | None
    flipped_rows: tuple[str, ...]
    cells: tuple[FaultCell, ...]
    solver_error: str | None = None

    def max_abs_delta_pct(self) -> float:
        deltas = [abs(c.delta_pct) for c in self.cells if c.delta_pct is not None]
        return max(deltas, default=0.0)


@dataclass(frozen=True)
class FaultReport:
    """Baseline behavior plus one entry per fault spec."""

    baseline_table: TruthTable
    baseline_margins: Mapping[str, Mapping[str, float]]
    entries: tuple[FaultEntry, ...]
    target_table: TruthTable | None = None


def _measured_voltages(network: FabricNetwork) -> tuple[dict, dict, TruthTable]:
    """Solve all 8 patterns; returns (volts[pattern][node], bits, realized table)."""
    measured = [n.id for n in network.measured_nodes]
    outputs = [n.id for n in network.output_nodes]
    volts: dict[str, dict[str, float]] = {}
    rows = {}
    for key in PATTERNS8:
        sol = solve_pattern(network, InputPattern.from_string(key))
        volts[key] = {m: sol.voltages[m] for m in measured}
        rows[key] = "".join(str(b) for b in sol.output_bits)
    margins = {
        key: {o: volts[key][o] - network.threshold for o in outputs}
        for key in PATTERNS8
    }
    return volts, margins, TruthTable(rows)


def fault_report(
    network: FabricNetwork,
    assignment: WeightAssignment | None,
    specs: Sequence[FaultSpec],
    target_table: TruthTable | None = None,
) -> FaultReport:
    """Evaluate each fault spec independently against the healthy baseline.

    Solver failures on a faulted copy are recorded in that entry and the
    campaign continues.
    """
    base = network if assignment is None else network.with_assignment(assignment)
    base_volts, base_margins, base_table = _measured_voltages(base)

    entries = []
    for spec in specs:
        cut = resolve_fault_edges(base, spec)
        faulted = base.with_disconnected(cut)
        try:
            fault_volts, _, fault_table = _measured_voltages(faulted)
        except FabricError as exc:
            entries.append(
                FaultEntry(spec=spec, cut_edges=cut, table=None, flipped_rows=(),
                           cells=(), solver_error=str(exc))
            )
            continue
        cells = []
        for key in PATTERNS8:
            for node, v0 in base_volts[key].items():
                vf = fault_volts[key][node]
                delta_abs = vf - v0
                delta_pct = 100.0 * delta_abs / v0 if abs(v0) >= NEAR_ZERO_V else None
                cells.append(
                    FaultCell(pattern=key, node=node, v_base=v0, v_fault=vf,
                              delta_pct=delta_pct, delta_abs=delta_abs)
                )
        flipped = tuple(
            key for key in PATTERNS8
            if fault_table.rows[key] != base_table.rows[key]
        )
        entries.append(
            FaultEntry(spec=spec, cut_edges=cut, table=fault_table,
                       flipped_rows=flipped, cells=tuple(cells))
        )
    return FaultReport(
        baseline_table=base_table, baseline_margins=base_margins,
        entries=tuple(entries), target_table=target_table,
    )


@dataclass(frozen=True)
class CampaignResult:
    """Per-zone reports plus a cross-zone ranking of fault severity."""

    zones: tuple[tuple[str, FaultReport], ...]
    ranking: tuple[tuple[str, int, float], ...]  # (fault name, flips, max |d%|)


def zone_campaign(
    network: FabricNetwork,
    assignment: WeightAssignment | None,
    zones: Sequence[FaultZone],
    target_table: TruthTable | None = None,
) -> CampaignResult:
    """Run fault_report per zone and rank faults by flips, then max |delta %|."""
    reports = tuple(
        (zone.name, fault_report(network, assignment, zone.faults, target_table))
        for zone in zones
    )
    ranked = sorted(
        (
            (entry.spec.name, len(entry.flipped_rows), entry.max_abs_delta_pct())
            for _, report in reports
            for entry in report.entries
        ),
        key=lambda item: (-item[1], -item[2], item[0]),
    )
    return CampaignResult(zones=reports, ranking=tuple(ranked))


def default_fault_campaign(network: FabricNetwork) -> list[FaultZone]:
    """The stock zone-4 experiments: per patch N5 and N8, drop the lowest- and
    highest-resistance input rows (alone and together) plus full patch
    disconnects.

    Row 1 maps to the input edge whose stitched-in resistor is smallest and
    row 4 to the largest; edit the campaign file to remap.
    """
    specs = []
    for patch in ("N5", "N8"):
        inbound = network.edges_into(patch)
        if not inbound:
            raise InvariantError(f"node {patch!r} has no input edges")
        row1 = min(inbound, key=lambda e: (e.resistance, e.id))
        row4 = max(inbound, key=lambda e: (e.resistance, e.id))
        specs.extend([
            FaultSpec(KIND_EDGE, (f"{row1.id}#opt{row1.selected}",),
                      label=f"{patch} row1"),
            FaultSpec(KIND_EDGE, (f"{row4.id}#opt{row4.selected}",),
                      label=f"{patch} row4"),
            FaultSpec(
                KIND_EDGE,
                (f"{row1.id}#opt{row1.selected}", f"{row4.id}#opt{row4.selected}"),
                label=f"{patch} row1+row4",
            ),
        ])
    patch_zone = FaultZone(
        name="Zone 4 patches",
        faults=(
            FaultSpec(KIND_PATCH, ("N5",), label="patch N5"),
            FaultSpec(KIND_PATCH, ("N8",), label="patch N8"),
        ),
    )
    return [FaultZone(name="Zone 4 rows", faults=tuple(specs)), patch_zone]


# -- campaign file format ------------------------------------------------------


def zones_from_json(text: str) -> list[FaultZone]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"campaign file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "zones" not in doc:
        raise SchemaError('campaign document must be {"zones": [...]}')
    unknown = set(doc) - {"zones"}
    if unknown:
        raise SchemaError(f"unknown campaign fields: {sorted(unknown)}")
    zones = []
    for i, entry in enumerate(doc["zones"]):
        if not isinstance(entry, dict) or set(entry) - {"name", "faults"}:
            raise SchemaError(f"zones[{i}] must be {{'name', 'faults'}}")
        faults = []
        for j, f in enumerate(entry.get("faults", [])):
            if not isinstance(f, dict) or set(f) - {"kind", "targets", "label"}:
                raise SchemaError(
                    f"zones[{i}].faults[{j}] must be {{'kind', 'targets', 'label'}}"
                )
            faults.append(
                FaultSpec(kind=f.get("kind", ""), targets=tuple(f.get("targets", ())),
                          label=f.get("label", ""))
            )
        zones.append(FaultZone(name=entry.get("name", f"zone {i}"),
                               faults=tuple(faults)))
    return zones


def zones_to_json(zones: Sequence[FaultZone]) -> str:
    return json.dumps(
        {
            "zones": [
                {
                    "name": z.name,
                    "faults": [
                        {"kind": f.kind, "targets": list(f.targets), "label": f.label}
                        for f in z.faults
                    ],
                }
                for z in zones
            ]
        },
        indent=2,
    )


def report_to_jsonable(report: FaultReport) -> dict:
    return {
        "baseline_table": dict(report.baseline_table.rows),
        "baseline_margins": {
            p: dict(m) for p, m in report.baseline_margins.items()
        },
        "target_table": (
            dict(report.target_table.rows) if report.target_table else None
        ),
        "faults": [
            {
                "label": e.spec.name,
                "kind": e.spec.kind,
                "targets": list(e.spec.targets),
                "cut_edges": list(e.cut_edges),
                "solver_error": e.solver_error,
                "table": dict(e.table.rows) if e.table else None,
                "flipped_rows": list(e.flipped_rows),
                "max_abs_delta_pct": e.max_abs_delta_pct(),
                "cells": [
                    {
                        "pattern": c.pattern,
                        "node": c.node,
                        "v_base": c.v_base,
                        "v_fault": c.v_fault,
                        "delta_pct": c.delta_pct,
                        "delta_abs": c.delta_abs,
                        "near_zero_baseline": c.near_zero_baseline,
                    }
                    for c in e.cells
                ],
            }
            for e in report.entries
        ],
    }


def report_csv_rows(report: FaultReport) -> list[list]:
    """Flat rows: fault, pattern, node, v_base, v_fault, delta_pct, delta_abs, flag."""
    rows: list[list] = [
        ["fault", "pattern", "node", "v_base", "v_fault", "delta_pct",
         "delta_abs", "near_zero_baseline"]
    ]
    for entry in report.entries:
        for c in entry.cells:
            rows.append([
                entry.spec.name, c.pattern, c.node, repr(c.v_base), repr(c.v_fault),
                "" if c.delta_pct is None else repr(c.delta_pct),
                repr(c.delta_abs), int(c.near_zero_baseline),
            ])
    return rows
