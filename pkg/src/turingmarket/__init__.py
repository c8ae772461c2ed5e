"""Stability analysis and simulation of capital-labour markets with
cross-diffusion: closed-form equilibria, dispersion relations and Turing
thresholds, two-country patch dynamics, and direct nonlinear PDE simulation.
"""

__version__ = "0.1.0"

from .dispersion import (
    DiffusionMatrix2,
    DispersionCurve,
    SpatialDomain,
    TuringReport,
    classify,
    dispersion_scan,
    exact_turing_threshold,
    mode_matrix,
    sufficient_d12_bound,
)
from .errors import ConfigError, DomainError, NumericalError
from .kinetics import (
    Equilibrium,
    KineticParams,
    State2,
    check_kinetic_stability,
    equilibria,
    jacobian_at,
    ratio_equilibria,
    ratio_rhs,
    simple_equilibria,
    simple_rhs,
)
from .patch import (
    MigrationFunction,
    PatchParams,
    State4,
    block_factor,
    check_thm42,
    check_thm43,
    gamma_matrix,
    patch_rhs,
)
from .patch_pde import (
    DiffusionMatrix4,
    TwoCountryDomain,
    check_thm44,
    factor_under_equal_diffusion,
    mode_matrix4,
    rescale_diffusion,
)
from .pde_sim import (
    Grid1D,
    SimConfig,
    SimResult,
    laplacian_neumann,
    simulate,
    step,
)
from .reports import CONDITION_REGISTRY, Condition, StabilityReport

__all__ = [
    "CONDITION_REGISTRY",
    "Condition",
    "ConfigError",
    "DiffusionMatrix2",
    "DiffusionMatrix4",
    "DispersionCurve",
    "DomainError",
    "Equilibrium",
    "Grid1D",
    "KineticParams",
    "MigrationFunction",
    "NumericalError",
    "PatchParams",
    "SimConfig",
    "SimResult",
    "SpatialDomain",
    "StabilityReport",
    "State2",
    "State4",
    "TuringReport",
    "TwoCountryDomain",
    "block_factor",
    "check_kinetic_stability",
    "check_thm42",
    "check_thm43",
    "check_thm44",
    "classify",
    "dispersion_scan",
    "equilibria",
    "exact_turing_threshold",
    "factor_under_equal_diffusion",
    "gamma_matrix",
    "jacobian_at",
    "laplacian_neumann",
    "mode_matrix",
    "mode_matrix4",
    "patch_rhs",
    "ratio_equilibria",
    "ratio_rhs",
    "rescale_diffusion",
    "simple_equilibria",
    "simple_rhs",
    "simulate",
    "step",
    "sufficient_d12_bound",
]
