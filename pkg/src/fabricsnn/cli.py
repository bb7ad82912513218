"""Command line interface.

Subcommands mirror the package operations: eval, table, learn, fault, mc,
transient, scenario, verify.  Reports are JSON on stdout (CSV for time
series and flat tables), every report embeds a run manifest, and output
files are written atomically.  Exit codes: 0 ok, 1 objective not met,
2 input error, 3 numeric error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from ._io import atomic_write_text, build_manifest, dump_json, parse_duration
from .errors import (
    ConvergenceError,
    FabricError,
    SchemaError,
    SingularSystemError,
    SolverError,
)
from . import faults as faults_mod
from . import learning as learning_mod
from . import oracle as oracle_mod
from . import perturbation as perturbation_mod
from . import sensors as sensors_mod
from . import solver as solver_mod
from .netlist import (
    GROUNDING_MODES,
    FabricNetwork,
    InputPattern,
    TruthTable,
    WeightAssignment,
    parse_network,
)

EXIT_OK = 0
EXIT_OBJECTIVE = 1
EXIT_INPUT = 2
EXIT_NUMERIC = 3


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc


def _load_network(path: str, mode: str | None = None) -> FabricNetwork:
    network = parse_network(_read_text(path))
    if mode is not None:
        network = replace(network, grounding_mode=mode)
    return network


def _load_assignment(path: str | None) -> WeightAssignment | None:
    if path is None:
        return None
    return WeightAssignment.from_json(_read_text(path))


def _parse_input_bits(text: str, network: FabricNetwork) -> InputPattern:
    pattern = InputPattern.from_string(text)
    want = len(network.input_terminals)
    if len(pattern.bits) != want:
        raise SchemaError(f"input {text!r} must have {want} bits")
    return pattern


def _csv_text(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf).writerows(rows)
    return buf.getvalue()


def _emit(report: dict, out: str | None) -> None:
    text = dump_json(report)
    if out:
        atomic_write_text(out, text + "\n")
    print(text)


# -- subcommand implementations ------------------------------------------------


def _cmd_eval(args) -> int:
    network = _load_network(args.net, args.mode)
    assignment = _load_assignment(args.assignment)
    pattern = _parse_input_bits(args.input, network)
    solution = solver_mod.solve_pattern(network, pattern, assignment)
    inputs = {"net": args.net}
    if args.assignment:
        inputs["assignment"] = args.assignment
    report = {
        "manifest": build_manifest("eval", inputs),
        "pattern": str(pattern),
        "grounding_mode": network.grounding_mode,
        "voltages": {k: solution.voltages[k] for k in sorted(solution.voltages)},
        "bits": dict(solution.bits),
        "outputs": "".join(str(b) for b in solution.output_bits),
        "margins": dict(solution.margins),
        "residual_norm": solution.residual_norm,
    }
    _emit(report, args.out)
    return EXIT_OK


def _cmd_table(args) -> int:
    network = _load_network(args.net)
    assignment = _load_assignment(args.assignment)
    evaluation = solver_mod.evaluate_truth_table(network, assignment)
    inputs = {"net": args.net}
    if args.assignment:
        inputs["assignment"] = args.assignment
    report = {
        "manifest": build_manifest("table", inputs),
        "rows": dict(evaluation.table.rows),
        "volts": {p: dict(v) for p, v in evaluation.volts.items()},
        "margins": {p: dict(m) for p, m in evaluation.margins.items()},
    }
    _emit(report, args.out)
    return EXIT_OK


def _cmd_learn(args) -> int:
    network = _load_network(args.net)
    target = TruthTable.from_json(_read_text(args.target))
    config = learning_mod.LearningConfig(
        seed=args.seed,
        restarts=args.restarts,
        max_iters=args.iters,
        strategy=args.strategy,
        secondary_objective=args.secondary,
    )
    result = learning_mod.learn(network, target, config)
    if args.improve_margins and result.error == 0:
        improved = learning_mod.improve_margins(
            network, result.assignment, target, config
        )
        result = replace(
            improved,
            iterations=result.iterations + improved.iterations,
            restarts=result.restarts,
            notes=result.notes + improved.notes,
        )
    if args.out:
        atomic_write_text(args.out, result.assignment.to_json() + "\n")
    report = {
        "manifest": build_manifest(
            "learn", {"net": args.net, "target": args.target}, {"seed": args.seed}
        ),
        "error": result.error,
        "min_margin": result.min_margin,
        "iterations": result.iterations,
        "restarts": [
            {"index": r.index, "error": r.error, "min_margin": r.min_margin,
             "iterations": r.iterations}
            for r in result.restarts
        ],
        "notes": list(result.notes),
        "assignment_file": args.out,
        "assignment": None if args.out else dict(result.assignment.selected),
    }
    _emit(report, None)
    if args.require_exact and result.error > 0:
        print(f"learning objective not met: error {result.error} > 0",
              file=sys.stderr)
        return EXIT_OBJECTIVE
    return EXIT_OK


def _cmd_fault(args) -> int:
    network = _load_network(args.net)
    assignment = _load_assignment(args.assignment)
    zones = faults_mod.zones_from_json(_read_text(args.campaign))
    target = (
        TruthTable.from_json(_read_text(args.target)) if args.target else None
    )
    campaign = faults_mod.zone_campaign(network, assignment, zones, target)
    inputs = {"net": args.net, "campaign": args.campaign}
    if args.assignment:
        inputs["assignment"] = args.assignment
    if args.target:
        inputs["target"] = args.target
    report = {
        "manifest": build_manifest("fault", inputs),
        "zones": [
            {"name": name, **faults_mod.report_to_jsonable(rep)}
            for name, rep in campaign.zones
        ],
        "ranking": [
            {"fault": name, "flipped_rows": flips, "max_abs_delta_pct": delta}
            for name, flips, delta in campaign.ranking
        ],
    }
    if args.out_csv:
        rows = []
        for _, rep in campaign.zones:
            body = faults_mod.report_csv_rows(rep)
            rows.extend(body if not rows else body[1:])
        atomic_write_text(args.out_csv, _csv_text(rows))
    _emit(report, args.out)
    return EXIT_OK


def _cmd_mc(args) -> int:
    network = _load_network(args.net)
    assignment = _load_assignment(args.assignment)
    spec = perturbation_mod.PerturbationSpec.from_json(_read_text(args.spec))
    spec = replace(spec, seed=args.seed)
    if args.samples is not None:
        spec = replace(spec, samples=args.samples)
    report_obj = perturbation_mod.monte_carlo(
        network, assignment, spec, threads=args.threads
    )
    inputs = {"net": args.net, "spec": args.spec}
    if args.assignment:
        inputs["assignment"] = args.assignment
    report = {
        "manifest": build_manifest("mc", inputs, {"seed": args.seed}),
        **report_obj.to_jsonable(),
    }
    if args.out_csv:
        atomic_write_text(args.out_csv, _csv_text(report_obj.csv_rows()))
    _emit(report, args.out)
    return EXIT_OK


def _cmd_transient(args) -> int:
    network = _load_network(args.net)
    assignment = _load_assignment(args.assignment)
    pattern = _parse_input_bits(args.input, network)
    resolved = network if assignment is None else network.with_assignment(assignment)
    taus = solver_mod.time_constants(
        resolved,
        pattern if resolved.grounding_mode != "grounded_zeros" else None,
    )
    t_end = parse_duration(args.t_end) if args.t_end else 10.0 * float(taus[0])
    dt = parse_duration(args.dt) if args.dt else float(taus[0]) / 1000.0
    trace = solver_mod.solve_transient(
        network, pattern, t_end, dt, assignment=assignment,
        reset_on_crossing=args.reset_on_crossing,
    )
    node_order = [n.id for n in network.nodes]
    rows = [["time"] + node_order]
    for k, t in enumerate(trace.times):
        rows.append([repr(float(t))] + [repr(float(trace.voltages[n][k]))
                                        for n in node_order])
    text = _csv_text(rows)
    if args.out:
        atomic_write_text(args.out, text)
    else:
        sys.stdout.write(text)
    summary = {
        "manifest": build_manifest("transient", {"net": args.net}),
        "pattern": str(pattern),
        "t_end": t_end,
        "dt": dt,
        "steps": len(trace.times) - 1,
        "crossings": dict(trace.crossings),
        "final": trace.final_voltages(),
        "csv": args.out,
    }
    if args.out:
        print(dump_json(summary))
    return EXIT_OK


def _cmd_scenario(args) -> int:
    network = _load_network(args.net)
    assignment = _load_assignment(args.assignment)
    model_kwargs = {}
    if args.sensor_config:
        doc = json.loads(_read_text(args.sensor_config))
        model_kwargs = dict(doc)
    try:
        model = sensors_mod.PressureSensorModel(**model_kwargs)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"bad sensor config: {exc}") from exc
    scenarios = sensors_mod.scenarios_from_json(_read_text(args.scenarios))
    results = []
    events = []
    for entry in scenarios:
        result = sensors_mod.run_scenario(
            network, assignment, model, entry["pressures"], label=entry["label"],
            trigger_pattern=args.trigger_pattern,
            trigger_output=args.trigger_output,
        )
        results.append(result)
        if result.trigger is not None:
            events.append(result.trigger)
    if args.events:
        lines = "".join(json.dumps(e.to_jsonable()) + "\n" for e in events)
        atomic_write_text(args.events, lines)
    inputs = {"net": args.net, "scenarios": args.scenarios}
    if args.assignment:
        inputs["assignment"] = args.assignment
    report = {
        "manifest": build_manifest("scenario", inputs),
        "scenarios": [
            {
                "label": r.label,
                "pressures": list(r.pressures),
                "pattern": str(r.pattern),
                "outputs": "".join(str(b) for b in r.outputs),
                "output_voltages": {k: r.solution.voltages[k]
                                    for k in r.solution.margins},
                "trigger": r.trigger.to_jsonable() if r.trigger else None,
            }
            for r in results
        ],
        "trigger_events": [e.to_jsonable() for e in events],
    }
    _emit(report, args.out)
    return EXIT_OK


def _cmd_verify(args) -> int:
    network = _load_network(args.net)
    assignment = _load_assignment(args.assignment)
    resolved = network if assignment is None else network.with_assignment(assignment)
    worst = 0.0
    per_pattern = {}
    for pattern in solver_mod.all_patterns(len(resolved.input_terminals)):
        direct = solver_mod.solve_pattern(resolved, pattern)
        relaxed = oracle_mod.relax_solve(resolved, pattern, tol=args.tol / 100.0)
        delta = max(
            abs(direct.voltages[node] - relaxed.voltages[node])
            for node in direct.voltages
        )
        per_pattern[str(pattern)] = delta
        worst = max(worst, delta)
    inputs = {"net": args.net}
    if args.assignment:
        inputs["assignment"] = args.assignment
    report = {
        "manifest": build_manifest("verify", inputs),
        "tolerance": args.tol,
        "max_abs_delta": worst,
        "per_pattern": per_pattern,
        "agrees": worst <= args.tol,
    }
    _emit(report, args.out)
    if worst > args.tol:
        print(f"solver/oracle disagreement {worst:.3e} V > {args.tol:.3e} V",
              file=sys.stderr)
        return EXIT_OBJECTIVE
    return EXIT_OK


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fabricsnn",
        description="Resistive fabric network simulator and toolkit",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, assignment=True, out=True):
        p.add_argument("--net", required=True, help="network JSON file")
        if assignment:
            p.add_argument("--assignment", help="weight assignment JSON file")
        if out:
            p.add_argument("--out", help="also write the JSON report here")

    p = sub.add_parser("eval", help="DC solve one input pattern")
    add_common(p)
    p.add_argument("--input", required=True, help="input bits, e.g. 010")
    p.add_argument("--mode", choices=GROUNDING_MODES,
                   help="override the network grounding mode")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("table", help="realized truth table with margins")
    add_common(p)
    p.set_defaults(func=_cmd_table)

    p = sub.add_parser("learn", help="search weights for a target table")
    add_common(p, assignment=False, out=False)
    p.add_argument("--target", required=True, help="target truth table JSON")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--iters", type=int, default=500)
    p.add_argument("--strategy", default=learning_mod.STRATEGY_STEEPEST,
                   choices=(learning_mod.STRATEGY_STEEPEST,
                            learning_mod.STRATEGY_ANNEALING))
    p.add_argument("--secondary", default=learning_mod.SECONDARY_MARGIN,
                   choices=(learning_mod.SECONDARY_MARGIN,
                            learning_mod.SECONDARY_NONE))
    p.add_argument("--improve-margins", action="store_true",
                   help="hill-climb margins after an exact match")
    p.add_argument("--require-exact", action="store_true",
                   help="exit 1 unless the final error is 0")
    p.add_argument("--out", help="write the best assignment JSON here")
    p.set_defaults(func=_cmd_learn)

    p = sub.add_parser("fault", help="run a fault campaign file")
    add_common(p)
    p.add_argument("--campaign", required=True, help="campaign JSON file")
    p.add_argument("--target", help="target truth table JSON")
    p.add_argument("--out-csv", help="write flat per-cell CSV here")
    p.set_defaults(func=_cmd_fault)

    p = sub.add_parser("mc", help="Monte Carlo wearability statistics")
    add_common(p)
    p.add_argument("--spec", required=True, help="perturbation spec JSON")
    p.add_argument("--seed", type=int, required=True,
                   help="seed (overrides the spec file)")
    p.add_argument("--samples", type=int, help="override the spec sample count")
    p.add_argument("--threads", type=int,
                   help="worker threads (0 = auto; default FABRIC_SNN_THREADS)")
    p.add_argument("--out-csv", help="write per-row CSV here")
    p.set_defaults(func=_cmd_mc)

    p = sub.add_parser("transient", help="RC charging trace as CSV")
    add_common(p, out=False)
    p.add_argument("--input", required=True, help="input bits, e.g. 111")
    p.add_argument("--t-end", help="duration, e.g. 10ms (default 10*tau_max)")
    p.add_argument("--dt", help="step, e.g. 1us (default tau_max/1000)")
    p.add_argument("--reset-on-crossing", action="store_true",
                   help="zero an output when it first reaches threshold")
    p.add_argument("--out", help="write the CSV here instead of stdout")
    p.set_defaults(func=_cmd_transient)

    p = sub.add_parser("scenario", help="pressure scenarios through the sensors")
    add_common(p)
    p.add_argument("--scenarios", required=True, help="scenario JSON file")
    p.add_argument("--sensor-config", help="sensor model JSON overrides")
    p.add_argument("--trigger-pattern", default="111")
    p.add_argument("--trigger-output", default=None)
    p.add_argument("--events", help="write trigger events as JSON lines here")
    p.set_defaults(func=_cmd_scenario)

    p = sub.add_parser("verify", help="cross-check solver against the oracle")
    add_common(p)
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=_cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SchemaError, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SingularSystemError, SolverError, ConvergenceError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except FabricError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
