"""Offline adaptive weight selection.

The learner searches the discrete space of per-edge resistor choices for an
assignment whose realized truth table matches a target.  The default
strategy repeatedly applies the best strictly-improving single-edge swap;
an annealing strategy is available for rugged targets.  Search progress is
scored by (mismatched output bits, then worst-row margin).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

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

STRATEGY_STEEPEST = "steepest_swap"
STRATEGY_ANNEALING = "annealing"
SECONDARY_NONE = "none"
SECONDARY_MARGIN = "max_min_margin"


@dataclass(frozen=True)
class LearningConfig:
    """Search settings; identical configs (and seed) give identical results."""

    seed: int
    restarts: int = 10
    max_iters: int = 500
    strategy: str = STRATEGY_STEEPEST
    secondary_objective: str = SECONDARY_MARGIN
    initial_temperature: float = 2.0
    cooling_factor: float = 0.95
    margin_weight: float = 0.1

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.strategy not in (STRATEGY_STEEPEST, STRATEGY_ANNEALING):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.secondary_objective not in (SECONDARY_NONE, SECONDARY_MARGIN):
            raise ValueError(
                f"unknown secondary objective {self.secondary_objective!r}"
            )


@dataclass(frozen=True)
class RestartSummary:
    index: int
    error: int
    min_margin: float
    iterations: int


@dataclass(frozen=True)
class LearningResult:
    """Best assignment found plus how the search got there."""

    assignment: WeightAssignment
    error: int
    min_margin: float
    iterations: int
    restarts: tuple[RestartSummary, ...]
    notes: tuple[str, ...] = ()


def table_error(realized: TruthTable, target: TruthTable) -> int:
    """Number of mismatched output bits across the 8 rows (0..16)."""
    mismatches = 0
    for pattern in PATTERNS8:
        got = realized.outputs(pattern)
        want = target.outputs(pattern)
        mismatches += (got[0] != want[0]) + (got[1] != want[1])
    return mismatches


def check_realizable(target: TruthTable) -> list[str]:
    """Flags that prove a target impossible for this passive architecture.

    With grounded zero inputs the all-zero row reads 00, and superposition
    of the non-negative single-bit responses makes every realized table
    monotone; a target violating either can never reach error 0.
    """
    violations = []
    if target.rows["000"] != "00":
        violations.append(
            f"zero-input row: 000 -> {target.rows['000']}; "
            "zero sources force outputs 00"
        )
    for p in PATTERNS8:
        for q in PATTERNS8:
            p_bits = [int(c) for c in p]
            q_bits = [int(c) for c in q]
            if p == q or any(pb > qb for pb, qb in zip(p_bits, q_bits)):
                continue
            p_out = target.outputs(p)
            q_out = target.outputs(q)
            if any(po > qo for po, qo in zip(p_out, q_out)):
                violations.append(
                    f"monotonicity: {p} -> {target.rows[p]} exceeds "
                    f"{q} -> {target.rows[q]} although {p} is contained in {q}"
                )
    return violations


class TableEvaluator:
    """Fast scorer for selections on one grounded network and target table."""

    def __init__(self, network: FabricNetwork, target: TruthTable):
        if network.grounding_mode != GROUNDED_ZEROS:
            raise ValueError("learning operates in grounded_zeros mode")
        if len(network.input_terminals) != 3 or len(network.output_nodes) != 2:
            raise ValueError("learning needs 3 terminals and 2 outputs")
        self.network = network
        self.target = target
        self.compact = CompactNetwork.from_network(network)
        self.patterns = [InputPattern.from_string(p) for p in PATTERNS8]
        self.term_v = self.compact.terminal_voltages(self.patterns)  # (8, 3)
        self.target_bits = np.array(target.bits_array(), dtype=np.int64)  # (8, 2)
        self.threshold = network.threshold
        self.edge_ids = [e.id for e in network.edges]
        self.option_counts = (
            self.compact.opt_ptr[1:] - self.compact.opt_ptr[:-1]
        ).astype(np.int64)
        self.base_selection = self.compact.selected.copy()

    def _system(self, selection: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        g = self.compact.edge_conductances(selection=selection)
        G, BU = self.compact.grounded_system(g)
        return G, BU @ self.term_v.T  # (n, n), (n, 8)

    def volts(self, selection: np.ndarray) -> np.ndarray:
        """Output voltages, shape (8 patterns, 2 outputs)."""
        G, B = self._system(selection)
        try:
            V = kernels.solve_multi(G, B)
        except ArithmeticError as exc:
            raise SolverError(str(exc)) from exc
        return V[self.compact.out_idx, :].T

    def score(self, selection: np.ndarray) -> tuple[int, float]:
        return self.score_volts(self.volts(selection))

    def score_volts(self, volts: np.ndarray) -> tuple[int, float]:
        """(mismatched bits, worst target-side margin) for output voltages.

        The margin of a cell is the signed distance from threshold in the
        direction the target wants (positive means the bit reads correctly);
        a readout exactly at threshold counts as logic 1.
        """
        realized = volts >= self.threshold
        error = int(np.sum(realized != (self.target_bits == 1)))
        margins = np.where(
            self.target_bits == 1, volts - self.threshold, self.threshold - volts
        )
        return error, float(margins.min())

    def swap_scan(self, selection: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Score every single-edge swap; returns (errors, margins) of shape (E, K).

        Slots past an edge's option count carry error 2**30 and margin -inf.
        """
        c = self.compact
        G, B = self._system(selection)
        volts = kernels.swap_volts(
            G, B, c.src_is_term, c.src_idx, c.dst_idx, c.connected,
            1.0 / c.opt_r, c.opt_ptr, selection, self.term_v, c.out_idx,
        )  # (E, K, 8, 2)
        realized = volts >= self.threshold
        mismatch = realized != (self.target_bits == 1)[None, None, :, :]
        errors = mismatch.sum(axis=(2, 3)).astype(np.int64)
        margins = np.where(
            (self.target_bits == 1)[None, None, :, :],
            volts - self.threshold,
            self.threshold - volts,
        ).min(axis=(2, 3))
        invalid = np.isnan(margins)
        errors[invalid] = 2**30
        margins[invalid] = -np.inf
        return errors, margins

    def to_assignment(self, selection: np.ndarray) -> WeightAssignment:
        return WeightAssignment(
            {eid: int(selection[k]) for k, eid in enumerate(self.edge_ids)}
        )


def score_selection(
    network: FabricNetwork, selection: np.ndarray, target: TruthTable
) -> tuple[int, float]:
    """One-off scoring helper (builds a TableEvaluator per call)."""
    return TableEvaluator(network, target).score(selection)


def _steepest_descent(
    ev: TableEvaluator,
    selection: np.ndarray,
    max_iters: int,
    use_margin: bool,
) -> tuple[np.ndarray, int, float, int]:
    """Apply best strictly-improving swaps until a local optimum."""
    error, margin = ev.score(selection)
    iterations = 0
    while iterations < max_iters:
        errors, margins = ev.swap_scan(selection)
        best_key = None
        best_move = None
        for e in range(len(ev.edge_ids)):
            for k in range(ev.option_counts[e]):
                if k == selection[e]:
                    continue
                e2 = int(errors[e, k])
                m2 = float(margins[e, k])
                if e2 < error or (use_margin and e2 == error and m2 > margin):
                    key = (e2, -m2, ev.edge_ids[e], k)
                    if best_key is None or key < best_key:
                        best_key = key
                        best_move = (e, k, e2, m2)
        if best_move is None:
            break
        e, k, error, margin = best_move
        selection[e] = k
        iterations += 1
    return selection, error, margin, iterations


def _random_selection(rng: np.random.Generator, counts: np.ndarray) -> np.ndarray:
    return np.array([rng.integers(0, c) for c in counts], dtype=np.int64)


def _anneal(
    ev: TableEvaluator,
    selection: np.ndarray,
    rng: np.random.Generator,
    config: LearningConfig,
) -> tuple[np.ndarray, int, float, int]:
    """Geometric-cooling annealing on error + margin scalarization."""
    n_edges = len(ev.edge_ids)
    error, margin = ev.score(selection)
    cost = error - config.margin_weight * margin
    best = (error, margin, selection.copy())
    temperature = config.initial_temperature
    sweeps = 0
    for _ in range(config.max_iters):
        for _ in range(n_edges):
            e = int(rng.integers(0, n_edges))
            k = int(rng.integers(0, ev.option_counts[e] - 1))
            if k >= selection[e]:
                k += 1
            old = selection[e]
            selection[e] = k
            e2, m2 = ev.score(selection)
            c2 = e2 - config.margin_weight * m2
            accept = c2 <= cost or rng.random() < np.exp(-(c2 - cost) / temperature)
            if accept:
                cost, error, margin = c2, e2, m2
                if (e2, -m2) < (best[0], -best[1]):
                    best = (e2, m2, selection.copy())
            else:
                selection[e] = old
        temperature *= config.cooling_factor
        sweeps += 1
        if best[0] == 0 and temperature < 1e-6:
            break
    error, margin, selection = best
    return selection, error, margin, sweeps


def learn(
    network: FabricNetwork,
    target: TruthTable,
    config: LearningConfig,
) -> LearningResult:
    """Search for an assignment realizing the target table.

    Restart 0 starts from all-zero option indices for a stable baseline;
    later restarts draw uniform random selections from the seeded generator.
    Restart results merge by (error, larger min margin, restart index).  A
    non-zero final error is a valid, reported outcome.
    """
    ev = TableEvaluator(network, target)
    notes = tuple(
        f"target failed realizability pre-check: {v}" for v in check_realizable(target)
    )
    rng = np.random.default_rng(config.seed)
    use_margin = config.secondary_objective == SECONDARY_MARGIN

    results = []
    summaries = []
    total_iterations = 0
    for restart in range(config.restarts):
        if restart == 0:
            selection = np.zeros(len(ev.edge_ids), dtype=np.int64)
        else:
            selection = _random_selection(rng, ev.option_counts)
        if config.strategy == STRATEGY_STEEPEST:
            selection, error, margin, iters = _steepest_descent(
                ev, selection, config.max_iters, use_margin
            )
        else:
            selection, error, margin, iters = _anneal(ev, selection, rng, config)
        total_iterations += iters
        results.append((error, -margin, restart, selection))
        summaries.append(
            RestartSummary(index=restart, error=error, min_margin=margin,
                           iterations=iters)
        )

    results.sort(key=lambda r: (r[0], r[1], r[2]))
    error, neg_margin, best_restart, selection = results[0]
    return LearningResult(
        assignment=ev.to_assignment(selection),
        error=error,
        min_margin=-neg_margin,
        iterations=total_iterations,
        restarts=tuple(summaries),
        notes=notes,
    )


def improve_margins(
    network: FabricNetwork,
    assignment: WeightAssignment,
    target: TruthTable,
    config: LearningConfig,
) -> LearningResult:
    """Hill-climb the worst-row margin while keeping the table error at 0.

    The input assignment must already realize the target (error 0), else
    ValueError; the returned margin is never smaller than the input margin
    and the error never leaves 0.
    """
    ev = TableEvaluator(network, target)
    selection = np.array(
        [assignment.selected[eid] for eid in ev.edge_ids], dtype=np.int64
    )
    error, margin = ev.score(selection)
    if error != 0:
        raise ValueError(
            f"margin improvement requires an error-0 assignment, got error {error}"
        )
    iterations = 0
    while iterations < config.max_iters:
        errors, margins = ev.swap_scan(selection)
        best_key = None
        best_move = None
        for e in range(len(ev.edge_ids)):
            for k in range(ev.option_counts[e]):
                if k == selection[e] or errors[e, k] != 0:
                    continue
                m2 = float(margins[e, k])
                if m2 > margin:
                    key = (-m2, ev.edge_ids[e], k)
                    if best_key is None or key < best_key:
                        best_key = key
                        best_move = (e, k, m2)
        if best_move is None:
            break
        e, k, margin = best_move
        selection[e] = k
        iterations += 1
    notes = () if iterations else ("no margin-improving swap exists",)
    return LearningResult(
        assignment=ev.to_assignment(selection),
        error=0,
        min_margin=margin,
        iterations=iterations,
        restarts=(RestartSummary(0, 0, margin, iterations),),
        notes=notes,
    )
