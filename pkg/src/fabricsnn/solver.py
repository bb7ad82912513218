"""DC and transient analysis of the passive resistive network.

DC operating points come from dense direct solves of the nodal conductance
system (the reference system is 10x10, so no sparse machinery).  Transients
use the exact matrix exponential of the linear RC system, computed through a
symmetric eigendecomposition, so the trace is exact at the grid points.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import _kernels as kernels
from ._compact import CompactNetwork
from .errors import SolverError
from .netlist import (
    GROUNDED_ZEROS,
    PATTERNS8,
    FabricNetwork,
    InputPattern,
    TruthTable,
    WeightAssignment,
)

#: Relative residual bound for accepted DC solutions (absolute when b = 0).
RESIDUAL_RTOL = 1e-10
RESIDUAL_ATOL = 1e-12
#: Slack allowed on the physical 0..supply voltage bounds.
BOUND_SLACK = 1e-9


@dataclass(frozen=True)
class LinearSystem:
    """Nodal system G @ v = b for one input pattern."""

    network: FabricNetwork
    pattern: InputPattern
    unknown_ids: tuple[str, ...]
    conductance: np.ndarray
    injection: np.ndarray
    source_voltages: Mapping[str, float]


@dataclass(frozen=True)
class DcSolution:
    """Steady-state voltages with the threshold readout."""

    pattern: InputPattern
    voltages: Mapping[str, float]
    bits: Mapping[str, int]
    output_bits: tuple[int, ...]
    margins: Mapping[str, float]
    residual_norm: float


@dataclass(frozen=True)
class TransientTrace:
    """Charging trace on a fixed time grid plus threshold-crossing times."""

    pattern: InputPattern
    times: np.ndarray
    voltages: Mapping[str, np.ndarray]
    crossings: Mapping[str, float | None]

    def final_voltages(self) -> dict[str, float]:
        return {node: float(v[-1]) for node, v in self.voltages.items()}


@dataclass(frozen=True)
class TableEvaluation:
    """Realized truth table with per-row output voltages and margins."""

    table: TruthTable
    volts: Mapping[str, Mapping[str, float]]
    margins: Mapping[str, Mapping[str, float]]


def all_patterns(n_bits: int) -> list[InputPattern]:
    """Every input pattern over n_bits terminals, in ascending binary order."""
    return [InputPattern(bits) for bits in itertools.product((0, 1), repeat=n_bits)]


def _resolve(network: FabricNetwork, assignment: WeightAssignment | None) -> FabricNetwork:
    return network if assignment is None else network.with_assignment(assignment)


def assemble_dc_system(
    network: FabricNetwork,
    pattern: InputPattern,
    assignment: WeightAssignment | None = None,
) -> LinearSystem:
    """Stamp the nodal equations for one pattern.

    Disconnected edges contribute no conductance.  Isolated unknowns (no
    conductance at all, possible only for floating terminals) raise
    SingularSystemError naming them.
    """
    network = _resolve(network, assignment)
    compact = CompactNetwork.from_network(network)
    unknown_ids, G, b, sources = compact.assemble(pattern)
    return LinearSystem(
        network=network, pattern=pattern, unknown_ids=unknown_ids,
        conductance=G, injection=b, source_voltages=sources,
    )


def _readout_bit(voltage: float, threshold: float) -> int:
    return 1 if voltage >= threshold else 0


def readout(solution: DcSolution, threshold: float) -> tuple[int, ...]:
    """Output logic bits at an explicit threshold (ties read as 1)."""
    return tuple(
        _readout_bit(solution.voltages[node], threshold)
        for node in sorted(solution.margins)
    )


def _check_residual(G: np.ndarray, V: np.ndarray, b: np.ndarray) -> float:
    residual = float(np.max(np.abs(G @ V - b))) if len(b) else 0.0
    scale = float(np.max(np.abs(b))) if len(b) else 0.0
    limit = RESIDUAL_RTOL * scale if scale > 0 else RESIDUAL_ATOL
    if residual > limit:
        raise SolverError(
            f"residual {residual:.3e} exceeds tolerance {limit:.3e}; "
            "system is numerically indefinite"
        )
    return residual


def _check_bounds(network: FabricNetwork, voltages: Mapping[str, float]) -> None:
    lo = -BOUND_SLACK * network.supply_voltage
    hi = (1.0 + BOUND_SLACK) * network.supply_voltage
    for node, v in voltages.items():
        if not lo <= v <= hi:
            raise SolverError(
                f"voltage {v:.6g} V at node {node} outside [0, supply]; "
                "passive network invariant violated"
            )


def solve_dc(system: LinearSystem) -> DcSolution:
    """Solve the assembled system and apply the threshold readout."""
    network = system.network
    try:
        V = kernels.solve_multi(system.conductance, system.injection.reshape(-1, 1))
    except ArithmeticError as exc:
        raise SolverError(str(exc)) from exc
    V = V[:, 0]
    residual = _check_residual(system.conductance, V, system.injection)

    voltages = dict(system.source_voltages)
    voltages.update(zip(system.unknown_ids, (float(x) for x in V)))
    # Grounded mode fixes the remaining terminals at 0 V explicitly.
    for term in network.input_terminals:
        voltages.setdefault(term.id, 0.0)
    _check_bounds(network, voltages)

    threshold = network.threshold
    bits = {
        n.id: _readout_bit(voltages[n.id], threshold) for n in network.measured_nodes
    }
    outputs = network.output_nodes
    return DcSolution(
        pattern=system.pattern,
        voltages=voltages,
        bits=bits,
        output_bits=tuple(_readout_bit(voltages[n.id], threshold) for n in outputs),
        margins={n.id: voltages[n.id] - threshold for n in outputs},
        residual_norm=residual,
    )


def solve_pattern(
    network: FabricNetwork,
    pattern: InputPattern,
    assignment: WeightAssignment | None = None,
) -> DcSolution:
    """Convenience wrapper: assemble then solve one pattern."""
    return solve_dc(assemble_dc_system(network, pattern, assignment))


def evaluate_truth_table(
    network: FabricNetwork,
    assignment: WeightAssignment | None = None,
) -> TableEvaluation:
    """Realized truth table over all 8 patterns with per-row output margins."""
    network = _resolve(network, assignment)
    if len(network.input_terminals) != 3 or len(network.output_nodes) != 2:
        raise ValueError("truth table evaluation needs 3 terminals and 2 outputs")
    out_ids = [n.id for n in network.output_nodes]
    threshold = network.threshold
    rows = {}
    volts: dict[str, dict[str, float]] = {}
    margins: dict[str, dict[str, float]] = {}
    for key in PATTERNS8:
        solution = solve_pattern(network, InputPattern.from_string(key))
        rows[key] = "".join(str(b) for b in solution.output_bits)
        volts[key] = {o: solution.voltages[o] for o in out_ids}
        margins[key] = {o: solution.voltages[o] - threshold for o in out_ids}
    return TableEvaluation(table=TruthTable(rows), volts=volts, margins=margins)


# -- transient ---------------------------------------------------------------


def _dynamic_split(system: LinearSystem):
    """Partition unknowns into RC (dynamic) and capacitance-free (algebraic)."""
    network = system.network
    caps = []
    dyn_idx = []
    alg_idx = []
    for i, node_id in enumerate(system.unknown_ids):
        node = network.node_by_id[node_id]
        if node.capacitance is not None:
            dyn_idx.append(i)
            caps.append(node.capacitance)
        else:
            alg_idx.append(i)
    return np.array(dyn_idx), np.array(alg_idx), np.array(caps)


def time_constants(
    network: FabricNetwork,
    pattern: InputPattern | None = None,
    assignment: WeightAssignment | None = None,
) -> np.ndarray:
    """RC time constants (seconds, descending) of the dynamic subsystem.

    Grounded mode is pattern independent; floating mode needs the pattern
    because it changes which terminals are unknowns.
    """
    network = _resolve(network, assignment)
    if pattern is None:
        if network.grounding_mode != GROUNDED_ZEROS:
            raise ValueError("floating mode time constants require a pattern")
        pattern = InputPattern((0,) * len(network.input_terminals))
    system = assemble_dc_system(network, pattern)
    _, w, _, _, _ = _modal_decomposition(system)
    return np.sort(1.0 / w)[::-1]


def _modal_decomposition(system: LinearSystem):
    """Eigen-decompose the dynamic system; returns (dyn_idx, w, Q, c_sqrt, reduced)."""
    dyn_idx, alg_idx, caps = _dynamic_split(system)
    G = system.conductance
    b = system.injection
    if len(alg_idx):
        Gaa = G[np.ix_(alg_idx, alg_idx)]
        Gad = G[np.ix_(alg_idx, dyn_idx)]
        Gda = G[np.ix_(dyn_idx, alg_idx)]
        try:
            gaa_inv_gad = np.linalg.solve(Gaa, Gad)
            gaa_inv_ba = np.linalg.solve(Gaa, b[alg_idx])
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"algebraic nodes form a singular block: {exc}") from exc
        S = G[np.ix_(dyn_idx, dyn_idx)] - Gda @ gaa_inv_gad
        b_eff = b[dyn_idx] - Gda @ gaa_inv_ba
        recover = (-gaa_inv_gad, gaa_inv_ba)
    else:
        S = G
        b_eff = b
        recover = None
    c_sqrt = np.sqrt(caps)
    M = S / np.outer(c_sqrt, c_sqrt)
    w, Q = np.linalg.eigh(M)
    if w[0] <= 0:
        raise SolverError(
            f"dynamic system is not positive definite (min eigenvalue {w[0]:.3e})"
        )
    return dyn_idx, w, Q, c_sqrt, (S, b_eff, alg_idx, recover)


def solve_transient(
    network: FabricNetwork,
    pattern: InputPattern,
    t_end: float,
    dt: float,
    assignment: WeightAssignment | None = None,
    initial_voltages: Mapping[str, float] | None = None,
    reset_on_crossing: bool = False,
) -> TransientTrace:
    """Integrate the RC charging from v(0) = 0 and detect threshold crossings.

    The step update is the exact exponential of the linear system, so the
    grid values carry no integration error; crossing times are interpolated
    linearly between grid points.  ``reset_on_crossing`` zeroes an output
    node when it first reaches threshold (integrate-and-fire experimentation;
    the passive hardware model keeps it off).
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if t_end < dt:
        raise ValueError("t_end must be >= dt")
    network = _resolve(network, assignment)
    system = assemble_dc_system(network, pattern)
    dyn_idx, w, Q, c_sqrt, (S, b_eff, alg_idx, recover) = _modal_decomposition(system)

    try:
        v_inf = np.linalg.solve(S, b_eff)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"singular dynamic system: {exc}") from exc

    n_steps = int(np.ceil(t_end / dt - 1e-12))
    times = np.arange(n_steps + 1) * dt

    dyn_ids = [system.unknown_ids[i] for i in dyn_idx]
    v0 = np.zeros(len(dyn_idx))
    if initial_voltages:
        for j, node_id in enumerate(dyn_ids):
            v0[j] = initial_voltages.get(node_id, 0.0)

    decay = np.exp(-w * dt)
    threshold = network.threshold
    out_positions = {
        n.id: dyn_ids.index(n.id) for n in network.output_nodes if n.id in dyn_ids
    }

    traj = np.empty((n_steps + 1, len(dyn_idx)))
    traj[0] = v0
    crossings: dict[str, float | None] = {n.id: None for n in network.output_nodes}
    for out, j in out_positions.items():
        if v0[j] >= threshold:
            crossings[out] = 0.0

    v = v0.copy()
    for k in range(1, n_steps + 1):
        y = Q.T @ (c_sqrt * (v - v_inf))
        v = v_inf + (Q @ (decay * y)) / c_sqrt
        for out, j in out_positions.items():
            if crossings[out] is None and v[j] >= threshold:
                prev = traj[k - 1, j]
                frac = (threshold - prev) / (v[j] - prev) if v[j] != prev else 1.0
                crossings[out] = float(times[k - 1] + frac * dt)
                if reset_on_crossing:
                    v[j] = 0.0
        traj[k] = v

    voltages: dict[str, np.ndarray] = {}
    for j, node_id in enumerate(dyn_ids):
        voltages[node_id] = traj[:, j]
    if len(alg_idx):
        proj, offset = recover
        alg_traj = traj @ proj.T + offset
        for j, i in enumerate(alg_idx):
            voltages[system.unknown_ids[i]] = alg_traj[:, j]
    for node_id, value in system.source_voltages.items():
        voltages[node_id] = np.full(n_steps + 1, float(value))
    for term in network.input_terminals:
        voltages.setdefault(term.id, np.zeros(n_steps + 1))
    return TransientTrace(
        pattern=pattern, times=times, voltages=voltages, crossings=crossings
    )
