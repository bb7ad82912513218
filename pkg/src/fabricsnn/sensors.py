"""Pressure-sensor front end and stimulation trigger events.

Pressure-sensitive pads drive a resistive divider; pad resistance falls with
applied pressure, so the divider voltage rises and, past the trigger
threshold, sets the corresponding network input bit.  A designated pattern
whose output reads logic 1 emits a stimulation trigger event.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

from .errors import SchemaError
from .netlist import FabricNetwork, InputPattern, WeightAssignment
from .solver import DcSolution, solve_pattern


@dataclass(frozen=True)
class PressureSensorModel:
    """Exponential pressure-to-resistance pad feeding a resistive divider.

    R(p) = r_pressed + (r_unpressed - r_pressed) * exp(-decay * p), strictly
    decreasing in pressure.  The curve parameters are synthetic defaults; the
    pad material is only characterized by its pressed/unpressed extremes.
    """

    r_unpressed: float = 10_000.0
    r_pressed: float = 500.0
    decay_per_unit_pressure: float = 3.0
    pull_resistance: float = 1000.0
    trigger_threshold: float = 2.3
    supply_voltage: float = 5.0

    def __post_init__(self):
        if not 0 < self.r_pressed < self.r_unpressed:
            raise ValueError("need 0 < r_pressed < r_unpressed")
        for name in ("decay_per_unit_pressure", "pull_resistance",
                     "trigger_threshold", "supply_voltage"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")

    def resistance(self, pressure: float) -> float:
        if pressure < 0:
            raise ValueError("pressure must be >= 0")
        return self.r_pressed + (self.r_unpressed - self.r_pressed) * math.exp(
            -self.decay_per_unit_pressure * pressure
        )


def sensor_voltage(model: PressureSensorModel, pressure: float) -> float:
    """Divider voltage for one pad; strictly increasing in pressure."""
    r = model.resistance(pressure)
    return model.supply_voltage * model.pull_resistance / (r + model.pull_resistance)


def pressures_to_pattern(
    model: PressureSensorModel, pressures: Sequence[float]
) -> InputPattern:
    """Input bits: 1 where the pad voltage reaches the trigger threshold."""
    return InputPattern(
        tuple(
            1 if sensor_voltage(model, p) >= model.trigger_threshold else 0
            for p in pressures
        )
    )


@dataclass(frozen=True)
class TriggerEvent:
    """Stimulation pulse emitted when the designated pattern reads logic 1."""

    pattern: str
    output_node: str
    output_voltage: float
    stimulus_current_a: float = 3.2e-3
    stimulus_rate_hz: float = 10_000.0
    stimulus_duration_s: float = 11.0

    def to_jsonable(self) -> dict:
        return {
            "pattern": self.pattern,
            "output_node": self.output_node,
            "output_voltage": self.output_voltage,
            "stimulus_current_a": self.stimulus_current_a,
            "stimulus_rate_hz": self.stimulus_rate_hz,
            "stimulus_duration_s": self.stimulus_duration_s,
        }


@dataclass(frozen=True)
class ScenarioResult:
    label: str
    pressures: tuple[float, ...]
    pattern: InputPattern
    solution: DcSolution
    outputs: tuple[int, ...]
    trigger: TriggerEvent | None


def run_scenario(
    network: FabricNetwork,
    assignment: WeightAssignment | None,
    model: PressureSensorModel,
    pressures: Sequence[float],
    label: str = "",
    trigger_pattern: str = "111",
    trigger_output: str | None = None,
) -> ScenarioResult:
    """Pressures -> input pattern -> DC solve -> readout (+ optional trigger).

    The trigger binding is configurable; by default the event fires when the
    all-ones pattern drives the first output (X) to logic 1.
    """
    base = network if assignment is None else network.with_assignment(assignment)
    if len(pressures) != len(base.input_terminals):
        raise ValueError(
            f"{len(pressures)} pressures for {len(base.input_terminals)} terminals"
        )
    pattern = pressures_to_pattern(model, pressures)
    solution = solve_pattern(base, pattern)

    out_ids = [n.id for n in base.output_nodes]
    trigger_output = trigger_output or out_ids[0]
    if trigger_output not in out_ids:
        raise ValueError(f"trigger output {trigger_output!r} is not an output node")

    trigger = None
    if str(pattern) == trigger_pattern:
        voltage = solution.voltages[trigger_output]
        if voltage >= base.threshold:
            trigger = TriggerEvent(
                pattern=str(pattern),
                output_node=trigger_output,
                output_voltage=voltage,
            )
    return ScenarioResult(
        label=label,
        pressures=tuple(float(p) for p in pressures),
        pattern=pattern,
        solution=solution,
        outputs=solution.output_bits,
        trigger=trigger,
    )


def scenarios_from_json(text: str) -> list[dict]:
    """Scenario file: JSON list of {"label": ..., "pressures": [a, b, c]}."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"scenario file is not valid JSON: {exc}") from exc
    if not isinstance(doc, list):
        raise SchemaError("scenario file must be a JSON list")
    out = []
    for i, entry in enumerate(doc):
        if not isinstance(entry, dict) or set(entry) - {"label", "pressures"}:
            raise SchemaError(f"scenario[{i}] must be {{'label', 'pressures'}}")
        if "pressures" not in entry:
            raise SchemaError(f"scenario[{i}]: missing 'pressures'")
        out.append(
            {"label": entry.get("label", f"scenario {i}"),
             "pressures": [float(p) for p in entry["pressures"]]}
        )
    return out
