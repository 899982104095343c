"""Numerical verification toolkit for equilibration bounds and the resilience monotone."""

from .qcore import (
    CompositeDims,
    DensityError,
    DensityMatrix,
    DimensionError,
    Observable,
    RandomKind,
    RandomSpec,
    partial_trace,
    sample_random,
    tensor_product,
    trace_distance,
    validate_density,
)
from .spectral import SpectralHamiltonian, dephase, eigendecompose, evolve, gap_report
from .metrics import (
    correlation_correction,
    effective_dimension,
    renyi_divergence,
    renyi_entropy,
    resilience,
)
from .equilibration import equilibration_bounds, subsystem_equilibration, variance_exact, variance_sampled
from .channels import (
    KrausChannel,
    UnitalChannel,
    check_t_independence,
    verify_corollary2,
    verify_theorem1,
)
from .constructions import (
    MicrocanonicalParams,
    TwinPeakParams,
    impossibility_sweep,
    microcanonical_state,
    rabi_witness,
    superadditivity_gap,
    theorem2_report,
    twin_peak_state,
)

__version__ = "0.1.0"

__all__ = [
    "MicrocanonicalParams",
    "TwinPeakParams",
    "CompositeDims",
    "DensityError",
    "DensityMatrix",
    "DimensionError",
    "Observable",
    "RandomKind",
    "RandomSpec",
    "partial_trace",
    "sample_random",
    "tensor_product",
    "trace_distance",
    "validate_density",
    "SpectralHamiltonian",
    "dephase",
    "eigendecompose",
    "evolve",
    "gap_report",
    "correlation_correction",
    "effective_dimension",
    "renyi_divergence",
    "renyi_entropy",
    "resilience",
    "equilibration_bounds",
    "subsystem_equilibration",
    "variance_exact",
    "variance_sampled",
    "KrausChannel",
    "UnitalChannel",
    "check_t_independence",
    "verify_corollary2",
    "verify_theorem1",
    "impossibility_sweep",
    "microcanonical_state",
    "rabi_witness",
    "superadditivity_gap",
    "theorem2_report",
    "twin_peak_state",
]
