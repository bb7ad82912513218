#!/usr/bin/env python3
"""Regenerate the bundled data files in src/fabricsnn/data/.

Scans seeded learning configs for a reference assignment that reproduces the
stock truth table and also exhibits the documented fault and jitter behavior
(both patch disconnects flip at least one row, the six row faults flip at
most two rows each, and the jitter study sees a nonzero flip rate on a
near-threshold row).  The winning config is recorded in
reference_config.json so every artifact is reproducible from the CLI.
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

import numpy as np

from fabricsnn import build_reference_network, evaluate_truth_table
from fabricsnn.faults import default_fault_campaign, fault_report, zones_to_json
from fabricsnn.learning import LearningConfig, learn
from fabricsnn.netlist import TruthTable, serialize_network
from fabricsnn.perturbation import PerturbationSpec, monte_carlo
from fabricsnn.sensors import PressureSensorModel, run_scenario

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "fabricsnn" / "data"

TARGET_ROWS = {
    "000": "00", "001": "00", "010": "10", "011": "11",
    "100": "00", "101": "10", "110": "11", "111": "11",
}

MC_SAMPLES = 10_000
MC_SEED = 2026

#: A pressed pad well past the trigger point; 0.0 leaves the bit clear.
PRESS = 2.0
TOUCH_SCENARIOS = [
    {"label": "none", "pressures": [0.0, 0.0, 0.0]},
    {"label": "C", "pressures": [0.0, 0.0, PRESS]},
    {"label": "B", "pressures": [0.0, PRESS, 0.0]},
    {"label": "BC", "pressures": [0.0, PRESS, PRESS]},
    {"label": "A", "pressures": [PRESS, 0.0, 0.0]},
    {"label": "AC", "pressures": [PRESS, 0.0, PRESS]},
    {"label": "AB", "pressures": [PRESS, PRESS, 0.0]},
    {"label": "ABC", "pressures": [PRESS, PRESS, PRESS]},
]

MOTION_SCENARIOS = [
    {"label": "static", "resistor_tolerance": 0.01, "thread_ohms": [0.0, 10.0],
     "contact_ohms": [0.0, 5.0], "samples": 2000, "seed": 11,
     "distribution": "uniform"},
    {"label": "low_motion", "resistor_tolerance": 0.05, "thread_ohms": [0.0, 30.0],
     "contact_ohms": [0.0, 20.0], "samples": 2000, "seed": 11,
     "distribution": "uniform"},
    {"label": "high_motion", "resistor_tolerance": 0.15, "thread_ohms": [0.0, 60.0],
     "contact_ohms": [0.0, 60.0], "samples": 2000, "seed": 11,
     "distribution": "uniform"},
]


def candidate_profile(network, target, assignment):
    """Fault and jitter behavior of one learned assignment."""
    applied = network.with_assignment(assignment)
    zones = default_fault_campaign(applied)
    row_zone, patch_zone = zones
    report = fault_report(network, assignment, row_zone.faults + patch_zone.faults)
    flips = {e.spec.name: len(e.flipped_rows) for e in report.entries}
    singles_ok = all(
        flips[f"{patch} {row}"] <= 2
        for patch in ("N5", "N8")
        for row in ("row1", "row4", "row1+row4")
    )
    patches_ok = flips["patch N5"] >= 1 and flips["patch N8"] >= 1
    return flips, singles_ok, patches_ok, zones


def scan(network, target):
    for restarts in (3, 4, 5, 6, 8, 12, 20):
        for seed in range(200):
            config = LearningConfig(seed=seed, restarts=restarts, max_iters=5000)
            result = learn(network, target, config)
            if result.error != 0 or result.min_margin > 0.02:
                continue
            flips, singles_ok, patches_ok, zones = candidate_profile(
                network, target, result.assignment
            )
            if not (singles_ok and patches_ok):
                continue
            spec = PerturbationSpec(samples=MC_SAMPLES, seed=MC_SEED)
            report = monte_carlo(network, result.assignment, spec)
            small = [
                (p, o)
                for p in report.patterns
                for o in report.outputs
                if abs(report.nominal_margins[p][o]) < 0.3
                and report.flip_rate[p][o] > 0
            ]
            big_quiet = all(
                report.flip_rate[p][o] == 0
                for p in report.patterns
                for o in report.outputs
                if abs(report.nominal_margins[p][o]) >= 1.0
            )
            print(
                f"seed={seed} restarts={restarts}: margin={result.min_margin:.4f} "
                f"flips={flips} small_flips={small} big_quiet={big_quiet}"
            )
            if small and big_quiet:
                return config, result, zones, report
    raise SystemExit("no reference candidate found; widen the scan")


def main() -> None:
    t0 = time.time()
    network = build_reference_network()
    target = TruthTable(TARGET_ROWS)
    config, result, zones, mc_report = scan(network, target)
    print(f"selected seed={config.seed} restarts={config.restarts} "
          f"error={result.error} min_margin={result.min_margin:.4f} "
          f"[{time.time() - t0:.0f}s]")

    evaluation = evaluate_truth_table(network, result.assignment)
    assert dict(evaluation.table.rows) == TARGET_ROWS

    # sanity: the full scenario set reproduces the table and 111 triggers
    model = PressureSensorModel()
    for entry in TOUCH_SCENARIOS:
        res = run_scenario(network, result.assignment, model, entry["pressures"],
                           label=entry["label"])
        want = TARGET_ROWS[str(res.pattern)]
        got = "".join(str(b) for b in res.outputs)
        assert got == want, (entry, got, want)
        if str(res.pattern) == "111":
            assert res.trigger is not None

    DATA_DIR.mkdir(parents=True, exist_ok=True)
    (DATA_DIR / "reference_network.json").write_text(
        serialize_network(network) + "\n"
    )
    (DATA_DIR / "reference_weights.json").write_text(
        result.assignment.to_json() + "\n"
    )
    (DATA_DIR / "reference_table.json").write_text(target.to_json() + "\n")
    (DATA_DIR / "fault_campaign.json").write_text(zones_to_json(zones) + "\n")
    (DATA_DIR / "mc_default.json").write_text(
        json.dumps(
            PerturbationSpec(samples=MC_SAMPLES, seed=MC_SEED, label="static").to_dict(),
            indent=2,
        )
        + "\n"
    )
    (DATA_DIR / "touch_scenarios.json").write_text(
        json.dumps(TOUCH_SCENARIOS, indent=2) + "\n"
    )
    (DATA_DIR / "motion_scenarios.json").write_text(
        json.dumps({"scenarios": MOTION_SCENARIOS}, indent=2) + "\n"
    )
    (DATA_DIR / "reference_config.json").write_text(
        json.dumps(
            {
                "seed": config.seed,
                "restarts": config.restarts,
                "max_iters": config.max_iters,
                "strategy": config.strategy,
                "secondary_objective": config.secondary_objective,
            },
            indent=2,
        )
        + "\n"
    )
    print(f"wrote data files to {DATA_DIR}")


if __name__ == "__main__":
    sys.exit(main())
