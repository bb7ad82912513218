"""Cross-validation routes that are structurally different from the solver.

Voltages are re-derived by Gauss-Seidel relaxation over per-node neighbor
lists built straight from the network object (no shared stamping with the
direct solver), and small weight searches are settled by exhaustive
enumeration.  Accuracy is the point here, not speed.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import _kernels as kernels
from .errors import ConvergenceError, SearchSpaceError, SingularSystemError
from .netlist import (
    GROUNDED_ZEROS,
    FabricNetwork,
    InputPattern,
    TruthTable,
    WeightAssignment,
)

DEFAULT_TOL = 1e-11
DEFAULT_MAX_ITERS = 200_000
ENUMERATION_GUARD = 10**6


@dataclass(frozen=True)
class RelaxationReport:
    """Result of a Gauss-Seidel run."""

    voltages: Mapping[str, float]
    iterations: int
    max_update: float


def relax_solve(
    network: FabricNetwork,
    pattern: InputPattern,
    assignment: WeightAssignment | None = None,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> RelaxationReport:
    """Relax node voltages until the largest sweep update drops below tol.

    Each unknown i is repeatedly replaced by
    (sum_j g_ij v_j + injections) / (sum_j g_ij + g_leak,i), sweeping in
    node-id order.  Diagonally dominant systems (every RC node leaks to
    ground) converge; non-convergence raises ConvergenceError carrying the
    last report.
    """
    if tol <= 0:
        raise ValueError("tol must be > 0")
    network = network if assignment is None else network.with_assignment(assignment)
    if len(pattern.bits) != len(network.input_terminals):
        raise ValueError("pattern width does not match the input terminals")

    supply = network.supply_voltage
    bit_of = {t.id: b for t, b in zip(network.input_terminals, pattern.bits)}
    grounded = network.grounding_mode == GROUNDED_ZEROS
    source_v: dict[str, float] = {}
    for term in network.input_terminals:
        if bit_of[term.id] == 1:
            source_v[term.id] = supply
        elif grounded:
            source_v[term.id] = 0.0

    unknown_ids = sorted(
        n.id for n in network.nodes
        if not n.is_input or (not grounded and bit_of[n.id] == 0)
    )
    index = {node_id: k for k, node_id in enumerate(unknown_ids)}

    n = len(unknown_ids)
    neighbors: list[list[tuple[float, int]]] = [[] for _ in range(n)]
    inj = np.zeros(n)
    diag = np.zeros(n)
    for edge in network.edges:
        if not edge.is_connected:
            continue
        g = 1.0 / edge.resistance
        for here, there in ((edge.src, edge.dst), (edge.dst, edge.src)):
            i = index.get(here)
            if i is None:
                continue
            diag[i] += g
            if there in source_v:
                inj[i] += g * source_v[there]
            else:
                neighbors[i].append((g, index[there]))
    for node_id, i in index.items():
        node = network.node_by_id[node_id]
        if node.leak_resistance is not None:
            diag[i] += 1.0 / node.leak_resistance

    dead = [unknown_ids[i] for i in range(n) if diag[i] == 0.0]
    if dead:
        raise SingularSystemError(
            f"no conductance path at node(s): {', '.join(dead)}", dead
        )

    ptr = np.zeros(n + 1, dtype=np.int64)
    for i in range(n):
        ptr[i + 1] = ptr[i] + len(neighbors[i])
    nbr_idx = np.array(
        [j for lst in neighbors for (_, j) in lst], dtype=np.int64
    )
    nbr_g = np.array([g for lst in neighbors for (g, _) in lst])

    v = np.zeros(n)
    iters, max_update = kernels.gs_sweeps(ptr, nbr_idx, nbr_g, diag, inj, v, tol,
                                          max_iters)
    voltages = dict(source_v)
    voltages.update(zip(unknown_ids, (float(x) for x in v)))
    report = RelaxationReport(voltages=voltages, iterations=iters,
                              max_update=float(max_update))
    if max_update >= tol:
        raise ConvergenceError(
            f"relaxation stalled at update {max_update:.3e} after {iters} sweeps",
            report=report,
        )
    return report


@dataclass(frozen=True)
class ExhaustiveResult:
    """Best assignment found by full enumeration."""

    assignment: WeightAssignment
    error: int
    min_margin: float
    evaluated: int


def exhaustive_assignments(
    network: FabricNetwork,
    edge_subset: Sequence[str],
    target: TruthTable,
    fixed_assignment: WeightAssignment | None = None,
    guard: int = ENUMERATION_GUARD,
) -> ExhaustiveResult:
    """Enumerate every option combination over edge_subset.

    Edges outside the subset stay at fixed_assignment (or the network's own
    selections).  Minimal table error wins; ties fall to the larger minimum
    margin, then to the lexicographically smallest option tuple.  This is the
    ground truth the local search is judged against, so candidates are scored
    with the same evaluator the learner uses.
    """
    from .learning import TableEvaluator  # oracle -> learning only, no cycle

    base = network if fixed_assignment is None else network.with_assignment(
        fixed_assignment
    )
    edge_index = {e.id: k for k, e in enumerate(base.edges)}
    unknown = [e for e in edge_subset if e not in edge_index]
    if unknown:
        raise ValueError(f"edge subset names unknown edges: {unknown}")
    subset_idx = [edge_index[e] for e in edge_subset]
    option_counts = [len(base.edges[k].options) for k in subset_idx]

    total = 1
    for c in option_counts:
        total *= c
    if total > guard:
        raise SearchSpaceError(
            f"enumeration of {total} combinations exceeds the guard ({guard})"
        )

    evaluator = TableEvaluator(base, target)
    selection = np.array([e.selected for e in base.edges], dtype=np.int64)
    best = None
    evaluated = 0
    for combo in itertools.product(*(range(c) for c in option_counts)):
        for k, choice in zip(subset_idx, combo):
            selection[k] = choice
        error, margin = evaluator.score(selection)
        evaluated += 1
        key = (error, -margin, combo)
        if best is None or key < best[0]:
            best = (key, selection.copy())
    key, selection = best
    assignment = WeightAssignment(
        {e.id: int(selection[k]) for k, e in enumerate(base.edges)}
    )
    return ExhaustiveResult(
        assignment=assignment, error=key[0], min_margin=-key[1], evaluated=evaluated
    )
