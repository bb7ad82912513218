"""Monte Carlo tolerance analysis: resistor spread, thread and contact jitter.

Every sample perturbs the stitched-in resistors of a network copy and
re-solves all input patterns; reports aggregate min/max/mean output voltages
and logic-flip rates against the nominal readout.  Sampling is deterministic
per (seed, sample index), so serial and parallel runs agree bit for bit.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from ._compact import CompactNetwork
from ._io import worker_count
from . import _kernels as kernels
from .errors import SchemaError, SolverError
from .netlist import (
    GROUNDED_ZEROS,
    FabricNetwork,
    InputPattern,
    WeightAssignment,
)
from .solver import all_patterns, solve_pattern

MAX_TERMINALS = 8
_SPEC_FIELDS = {"resistor_tolerance", "thread_ohms", "contact_ohms", "samples",
                "seed", "distribution", "label"}


@dataclass(frozen=True)
class PerturbationSpec:
    """Jitter magnitudes for one Monte Carlo run.

    The selected resistor of every edge is scaled by (1 + u), u drawn within
    +/- resistor_tolerance, then per-edge series thread and contact
    resistances are added.  Uniform draws by default (worst-case component
    reasoning); "normal" uses sigma = tolerance / 3 clipped at the bounds.
    """

    resistor_tolerance: float = 0.01
    thread_ohms: tuple[float, float] = (0.0, 10.0)
    contact_ohms: tuple[float, float] = (0.0, 5.0)
    samples: int = 1
    seed: int = 0
    distribution: str = "uniform"
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "thread_ohms", tuple(self.thread_ohms))
        object.__setattr__(self, "contact_ohms", tuple(self.contact_ohms))
        if self.resistor_tolerance < 0:
            raise ValueError("resistor_tolerance must be >= 0")
        for name, rng in (("thread_ohms", self.thread_ohms),
                          ("contact_ohms", self.contact_ohms)):
            if len(rng) != 2 or rng[0] < 0 or rng[1] < rng[0]:
                raise ValueError(f"{name} must be (lo, hi) with 0 <= lo <= hi")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.distribution not in ("uniform", "normal"):
            raise ValueError(f"unknown distribution {self.distribution!r}")

    @classmethod
    def from_json(cls, text: str) -> "PerturbationSpec":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"perturbation spec is not valid JSON: {exc}") from exc
        return cls.from_dict(doc)

    @classmethod
    def from_dict(cls, doc: dict) -> "PerturbationSpec":
        if not isinstance(doc, dict):
            raise SchemaError("perturbation spec must be a JSON object")
        unknown = set(doc) - _SPEC_FIELDS
        if unknown:
            raise SchemaError(f"unknown perturbation fields: {sorted(unknown)}")
        kwargs = dict(doc)
        for key in ("thread_ohms", "contact_ohms"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        try:
            return cls(**kwargs)
        except ValueError as exc:
            raise SchemaError(str(exc)) from exc

    def to_dict(self) -> dict:
        return {
            "resistor_tolerance": self.resistor_tolerance,
            "thread_ohms": list(self.thread_ohms),
            "contact_ohms": list(self.contact_ohms),
            "samples": self.samples,
            "seed": self.seed,
            "distribution": self.distribution,
            "label": self.label,
        }


def _sample_rng(spec: PerturbationSpec, sample_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(spec.seed ^ sample_index))


def perturbed_resistances(
    nominal: np.ndarray, spec: PerturbationSpec, sample_index: int
) -> np.ndarray:
    """Per-edge perturbed resistance for one sample; pure in (seed, index)."""
    rng = _sample_rng(spec, sample_index)
    n = len(nominal)
    tol = spec.resistor_tolerance
    if spec.distribution == "uniform":
        u = rng.uniform(-tol, tol, n)
    else:
        u = rng.normal(0.0, tol / 3.0, n) if tol > 0 else np.zeros(n)
        u = np.clip(u, -tol, tol)
    thread = rng.uniform(spec.thread_ohms[0], spec.thread_ohms[1], n)
    contact = rng.uniform(spec.contact_ohms[0], spec.contact_ohms[1], n)
    return nominal * (1.0 + u) + thread + contact


def sample_network(
    network: FabricNetwork, spec: PerturbationSpec, sample_index: int
) -> FabricNetwork:
    """Perturbed copy of the network for one Monte Carlo sample."""
    nominal = np.array([e.resistance for e in network.edges])
    perturbed = perturbed_resistances(nominal, spec, sample_index)
    return network.with_edge_resistances(
        {e.id: float(r) for e, r in zip(network.edges, perturbed)}
    )


@dataclass(frozen=True)
class StabilityReport:
    """Per (pattern, output) statistics over the Monte Carlo samples."""

    label: str
    spec: PerturbationSpec
    patterns: tuple[str, ...]
    outputs: tuple[str, ...]
    nominal_volts: Mapping[str, Mapping[str, float]]
    nominal_bits: Mapping[str, Mapping[str, int]]
    nominal_margins: Mapping[str, Mapping[str, float]]
    v_min: Mapping[str, Mapping[str, float]]
    v_max: Mapping[str, Mapping[str, float]]
    mean: Mapping[str, Mapping[str, float]]
    flip_rate: Mapping[str, Mapping[str, float]]
    samples_used: int
    failed_samples: int

    def to_jsonable(self) -> dict:
        return {
            "label": self.label,
            "spec": self.spec.to_dict(),
            "samples_used": self.samples_used,
            "failed_samples": self.failed_samples,
            "rows": [
                {
                    "pattern": p,
                    "output": o,
                    "nominal": self.nominal_volts[p][o],
                    "nominal_bit": self.nominal_bits[p][o],
                    "margin": self.nominal_margins[p][o],
                    "v_min": self.v_min[p][o],
                    "v_max": self.v_max[p][o],
                    "mean": self.mean[p][o],
                    "flip_rate": self.flip_rate[p][o],
                }
                for p in self.patterns
                for o in self.outputs
            ],
        }

    def csv_rows(self) -> list[list]:
        rows: list[list] = [["pattern", "output", "vmin", "vmax", "mean", "flip_rate"]]
        for p in self.patterns:
            for o in self.outputs:
                rows.append([
                    p, o, repr(self.v_min[p][o]), repr(self.v_max[p][o]),
                    repr(self.mean[p][o]), repr(self.flip_rate[p][o]),
                ])
        return rows


def _output_volts_for_sample(
    compact: CompactNetwork,
    resistances: np.ndarray,
    patterns: Sequence[InputPattern],
    term_v: np.ndarray | None,
) -> np.ndarray:
    """(P, n_out) output voltages for one perturbed resistance vector."""
    g = compact.edge_conductances(resistances=resistances)
    network = compact.network
    if network.grounding_mode == GROUNDED_ZEROS:
        G, BU = compact.grounded_system(g)
        B = BU @ term_v.T
        V = kernels.solve_multi(G, B)
        return V[compact.out_idx, :].T
    out = np.empty((len(patterns), len(compact.out_idx)))
    out_ids = [compact.rc_ids[i] for i in compact.out_idx]
    for p, pattern in enumerate(patterns):
        unknown_ids, G, b, sources = compact.assemble(pattern, g)
        V = kernels.solve_multi(G, b.reshape(-1, 1))[:, 0]
        lookup = dict(zip(unknown_ids, V))
        out[p] = [lookup[o] for o in out_ids]
    return out


def monte_carlo(
    network: FabricNetwork,
    assignment: WeightAssignment | None,
    spec: PerturbationSpec,
    threads: int | None = None,
) -> StabilityReport:
    """Sample jittered copies and aggregate output statistics and flip rates.

    Samples whose perturbed system fails to solve are excluded from the
    statistics and counted in failed_samples.  Thread count comes from the
    argument, else FABRIC_SNN_THREADS (0 = auto), else 1; results are
    identical either way.
    """
    base = network if assignment is None else network.with_assignment(assignment)
    n_terms = len(base.input_terminals)
    if n_terms > MAX_TERMINALS:
        raise ValueError(f"too many input terminals ({n_terms}) to sweep all patterns")
    patterns = all_patterns(n_terms)
    pattern_keys = tuple(str(p) for p in patterns)
    out_ids = tuple(n.id for n in base.output_nodes)
    threshold = base.threshold

    nominal_volts = {}
    nominal_bits = {}
    nominal_margins = {}
    for key, pattern in zip(pattern_keys, patterns):
        sol = solve_pattern(base, pattern)
        nominal_volts[key] = {o: sol.voltages[o] for o in out_ids}
        nominal_bits[key] = {
            o: (1 if sol.voltages[o] >= threshold else 0) for o in out_ids
        }
        nominal_margins[key] = {o: sol.voltages[o] - threshold for o in out_ids}

    compact = CompactNetwork.from_network(base)
    term_v = compact.terminal_voltages(patterns)
    nominal_r = np.array([e.resistance for e in base.edges])

    n_samples = spec.samples
    volts = np.empty((n_samples, len(patterns), len(out_ids)))
    ok = np.zeros(n_samples, dtype=bool)

    def run_range(lo: int, hi: int) -> None:
        for i in range(lo, hi):
            resistances = perturbed_resistances(nominal_r, spec, i)
            try:
                volts[i] = _output_volts_for_sample(compact, resistances, patterns,
                                                    term_v)
                ok[i] = True
            except (ArithmeticError, SolverError):
                ok[i] = False

    n_workers = worker_count(threads)
    if n_workers <= 1 or n_samples < 2 * n_workers:
        run_range(0, n_samples)
    else:
        bounds = np.linspace(0, n_samples, n_workers + 1, dtype=int)
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            futures = [
                pool.submit(run_range, int(lo), int(hi))
                for lo, hi in zip(bounds[:-1], bounds[1:])
            ]
            for f in futures:
                f.result()

    used = volts[ok]
    n_ok = int(ok.sum())
    if n_ok == 0:
        raise SolverError("every Monte Carlo sample failed to solve")
    bits_nominal = np.array(
        [[nominal_bits[p][o] for o in out_ids] for p in pattern_keys]
    )
    flips = ((used >= threshold).astype(int) != bits_nominal[None, :, :]).sum(axis=0)

    def per_cell(matrix: np.ndarray) -> dict:
        return {
            p: {o: float(matrix[i, j]) for j, o in enumerate(out_ids)}
            for i, p in enumerate(pattern_keys)
        }

    return StabilityReport(
        label=spec.label,
        spec=spec,
        patterns=pattern_keys,
        outputs=out_ids,
        nominal_volts=nominal_volts,
        nominal_bits=nominal_bits,
        nominal_margins=nominal_margins,
        v_min=per_cell(used.min(axis=0)),
        v_max=per_cell(used.max(axis=0)),
        mean=per_cell(used.mean(axis=0)),
        flip_rate=per_cell(flips / n_ok),
        samples_used=n_ok,
        failed_samples=n_samples - n_ok,
    )


def flip_monotonicity_violations(report: StabilityReport) -> list[str]:
    """Rows where a larger nominal margin flips more often than a smaller one.

    Flip rate should fall as the nominal margin grows; exceptions are
    statistical artifacts worth flagging, not hard failures.
    """
    cells = sorted(
        (
            (abs(report.nominal_margins[p][o]), report.flip_rate[p][o], p, o)
            for p in report.patterns
            for o in report.outputs
        ),
        key=lambda c: c[0],
    )
    flags = []
    for (m1, r1, p1, o1), (m2, r2, p2, o2) in zip(cells, cells[1:]):
        if r2 > r1 and m2 > m1:
            flags.append(
                f"{p2}/{o2} (|margin| {m2:.3f}, flip {r2:.4f}) exceeds "
                f"{p1}/{o1} (|margin| {m1:.3f}, flip {r1:.4f})"
            )
    return flags


@dataclass(frozen=True)
class SweepReport:
    """Stability reports per scenario plus mean-voltage deltas vs the first."""

    reports: tuple[StabilityReport, ...]
    mean_delta_vs_first: Mapping[str, Mapping[str, Mapping[str, float]]]

    def to_jsonable(self) -> dict:
        return {
            "scenarios": [r.to_jsonable() for r in self.reports],
            "mean_delta_vs_first": {
                label: {p: dict(cells) for p, cells in by_pattern.items()}
                for label, by_pattern in self.mean_delta_vs_first.items()
            },
        }


def scenario_sweep(
    network: FabricNetwork,
    assignment: WeightAssignment | None,
    specs: Sequence[PerturbationSpec],
    threads: int | None = None,
) -> SweepReport:
    """Run monte_carlo per scenario spec and compare mean voltages."""
    if not specs:
        raise ValueError("scenario sweep needs at least one spec")
    reports = tuple(
        monte_carlo(network, assignment, spec, threads=threads) for spec in specs
    )
    first = reports[0]
    deltas = {}
    for idx, report in enumerate(reports[1:], start=1):
        deltas[report.label or f"scenario {idx}"] = {
            p: {
                o: report.mean[p][o] - first.mean[p][o]
                for o in report.outputs
            }
            for p in report.patterns
        }
    return SweepReport(reports=reports, mean_delta_vs_first=deltas)


def specs_from_json(text: str) -> list[PerturbationSpec]:
    """Scenario file: {"scenarios": [perturbation spec objects]}."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"scenario file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "scenarios" not in doc:
        raise SchemaError('scenario sweep document must be {"scenarios": [...]}')
    unknown = set(doc) - {"scenarios"}
    if unknown:
        raise SchemaError(f"unknown sweep fields: {sorted(unknown)}")
    return [PerturbationSpec.from_dict(entry) for entry in doc["scenarios"]]
