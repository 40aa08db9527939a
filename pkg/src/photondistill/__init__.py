"""Exact simulation and analysis of linear-optical photon distillation."""

from .circuits import (
    BUILTIN_NAMES,
    Circuit,
    CircuitParseError,
    LayoutTemplate,
    NamedCircuit,
    builtin_circuit,
    distill3,
    distill3_ideal_output,
    distill4,
    distill4_ideal_output,
    format_circuit,
    hom2,
    ideal_input,
    parse_circuit_text,
    resolve_layout,
    run_circuit,
    sb_step_circuit,
)
from .distill import (
    DistillationReport,
    PlanStep,
    analyze,
    break_even,
    crossover_sb,
    n3_error_lower,
    n3_error_upper,
    n3_psuccess_lower,
    plan,
    sb_error,
    sb_expected_photons,
    sb_fit_check,
    sb_success_prob,
    simulate_sb,
)
from .fock import (
    ASYMMETRIC_THETA,
    DEFAULT_PRUNE_TOL,
    FIFTY_FIFTY_THETA,
    BeamsplitterSpec,
    FockState,
    ModeKey,
    OccupationConfig,
    apply_beamsplitter,
    apply_rail_unitary,
    inner_product,
    phase_normalized,
    prune,
    relabel_internals,
    single_photon_state,
    states_equal_up_to_phase,
    tensor,
    vacuum_state,
)
from .measurement import (
    DetectionPattern,
    PostSelectionResult,
    WeightedEnsemble,
    fidelity_to_ideal,
    postselect,
    purity,
    reduced_internal_density,
)
from .noise import (
    DetectorModel,
    MixedOrderFit,
    NoisyPostSelectionStats,
    mixed_order_scan,
    noisy_postselect,
    noisy_postselect_mc,
)
from .source import (
    AllDistinctErrorModes,
    AllSameErrorMode,
    ErrorConfiguration,
    ExplicitErrorModes,
    SourceModel,
    enumerate_inputs,
    error_configurations,
    input_state,
    sample_input,
)

__version__ = "0.1.0"
