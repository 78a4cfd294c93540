"""Operator toolkit for N-particle scattering: Lippmann-Schwinger, Faddeev and
Heitler K-matrix equations, their asymptotic solutions, and diagnostics."""

__version__ = "0.1.0"

from .linop import (
    COND_MAX,
    DegenerateInputError,
    DomainError,
    FreeSpectrum,
    InvalidInputError,
    NearSingularError,
    ScatteringError,
    SpectralParameter,
    green_limits_check,
    green_split,
    op_norm,
    resolvent_free,
    solve_operator_equation,
)
from .twobody import (
    GridSpec,
    PairChannel,
    PairPotential,
    grid_ls_solve,
    k_from_t,
    min_binding_energy,
    pair_unitarity_defect,
    solve_k_pair,
    solve_t_pair,
    two_body_heitler_residual,
)
from .multibody import (
    ChannelOperatorSet,
    ScatteringSystem,
    exact_t,
    faddeev_solve,
    heitler_exact_k,
    impulse_t,
    k_components_solve,
    linearized_t,
    osborn_t,
    script_t_components,
    t_from_k_full,
    unitary_impulse_t,
)
from .diagnostics import (
    DiagnosticsReport,
    ScanResult,
    Thresholds,
    approximation_error_scan,
    commutator_residual,
    product_expansion_residual,
    second_order_norm,
    smallness_report,
    unitarity_defect,
    unitarity_reduction_check,
)
from .modelspace import (
    EnergyGridSpec,
    ModelConfig,
    build_flat_model,
    build_tensor_model_n3,
    build_yamaguchi_grid,
    energy_grid,
)

__all__ = [
    "__version__",
    "COND_MAX",
    "DegenerateInputError",
    "DomainError",
    "FreeSpectrum",
    "InvalidInputError",
    "NearSingularError",
    "ScatteringError",
    "SpectralParameter",
    "green_limits_check",
    "green_split",
    "op_norm",
    "resolvent_free",
    "solve_operator_equation",
    "GridSpec",
    "PairChannel",
    "PairPotential",
    "grid_ls_solve",
    "k_from_t",
    "min_binding_energy",
    "pair_unitarity_defect",
    "solve_k_pair",
    "solve_t_pair",
    "two_body_heitler_residual",
    "ChannelOperatorSet",
    "ScatteringSystem",
    "exact_t",
    "faddeev_solve",
    "heitler_exact_k",
    "impulse_t",
    "k_components_solve",
    "linearized_t",
    "osborn_t",
    "script_t_components",
    "t_from_k_full",
    "unitary_impulse_t",
    "DiagnosticsReport",
    "ScanResult",
    "Thresholds",
    "approximation_error_scan",
    "commutator_residual",
    "product_expansion_residual",
    "second_order_norm",
    "smallness_report",
    "unitarity_defect",
    "unitarity_reduction_check",
    "EnergyGridSpec",
    "ModelConfig",
    "build_flat_model",
    "build_tensor_model_n3",
    "build_yamaguchi_grid",
    "energy_grid",
]
