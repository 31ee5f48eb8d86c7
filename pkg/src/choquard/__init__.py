"""Numerical laboratory for normalized ground states of the (fractional)
Choquard/Hartree equation and spectral stability of the associated standing
waves, classical and Klein-Gordon."""

from .params import (
    AdmissibilityVerdict,
    ModelParams,
    classify_admissibility,
    gamma_big,
)
from .grid import Field, GridSpec, inner, l2_norm_sq, read_field, write_field
from .energy import EnergyBreakdown, HartreeEnergy, energy, energy_gradient
from .rearrange import rearrange, rearrange_values
from .solver import (
    GroundState,
    SolverOptions,
    solve_classical_state,
    solve_ground_state,
    to_classical,
    verify_identities,
)
from .linops import LinearizedPair, SpectralReport, build_spectral_report
from .classify import StabilityVerdict, classify_hartree, classify_kg

__all__ = [
    "AdmissibilityVerdict",
    "ModelParams",
    "classify_admissibility",
    "gamma_big",
    "Field",
    "GridSpec",
    "inner",
    "l2_norm_sq",
    "read_field",
    "write_field",
    "EnergyBreakdown",
    "HartreeEnergy",
    "energy",
    "energy_gradient",
    "rearrange",
    "rearrange_values",
    "GroundState",
    "SolverOptions",
    "solve_classical_state",
    "solve_ground_state",
    "to_classical",
    "verify_identities",
    "LinearizedPair",
    "SpectralReport",
    "build_spectral_report",
    "StabilityVerdict",
    "classify_hartree",
    "classify_kg",
]

__version__ = "0.1.0"
