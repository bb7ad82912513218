"""Resistive fabric network simulator.

Models a layered crossbar of selectable synapse resistors feeding RC
threshold nodes: DC and transient solving, offline discrete weight learning,
fault injection, Monte Carlo tolerance analysis, and a pressure-sensor
front end, with an independent relaxation oracle for cross-checking.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND
from .netlist import (
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
from .solver import (
    DcSolution,
    LinearSystem,
    TableEvaluation,
    TransientTrace,
    assemble_dc_system,
    evaluate_truth_table,
    readout,
    solve_dc,
    solve_pattern,
    solve_transient,
    time_constants,
)
from .oracle import RelaxationReport, exhaustive_assignments, relax_solve
from .learning import (
    LearningConfig,
    LearningResult,
    check_realizable,
    improve_margins,
    learn,
    table_error,
)
from .faults import (
    FaultReport,
    FaultSpec,
    FaultZone,
    apply_fault,
    default_fault_campaign,
    fault_report,
    zone_campaign,
)
from .perturbation import (
    PerturbationSpec,
    StabilityReport,
    monte_carlo,
    sample_network,
    scenario_sweep,
)
from .sensors import (
    PressureSensorModel,
    TriggerEvent,
    pressures_to_pattern,
    run_scenario,
    sensor_voltage,
)

__all__ = [name for name in dir() if not name.startswith("_")]
