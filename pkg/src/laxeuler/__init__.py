"""Pseudo-spectral 2D Euler on the torus with numerical checks of its Lax pair."""

from .spectral import (
    Grid,
    RealField,
    SpectralField,
    bracket_dealiased,
    bracket_exact,
    from_modes,
    multiply_exact,
    poisson_solve,
    spectral_derivative,
    transform_forward,
    transform_inverse,
    velocity_from_stream,
)
from .dynamics import (
    FlowState,
    TimeStepper,
    ZakharovParams,
    diagnostics,
    euler_rhs,
    initial_condition,
    integrate,
    phi_rhs,
    step,
    zakharov_rhs,
    zakharov_solve_S,
)
from .lax import (
    ModeBox,
    OperatorMatrix,
    SpectrumReport,
    assemble_operator,
    eigendecompose,
    eigenfunction_transport_check,
    spectrum_along_flow,
)
from .reports import ResidualReport
from .verification import (
    bracket_identity_suite,
    compatibility_residual,
    conservation_suite,
    zakharov_residual,
)

__version__ = "0.1.0"

__all__ = [
    "Grid", "RealField", "SpectralField", "bracket_dealiased", "bracket_exact", "from_modes",
    "multiply_exact", "poisson_solve", "spectral_derivative", "transform_forward",
    "transform_inverse", "velocity_from_stream",
    "FlowState", "TimeStepper", "ZakharovParams", "diagnostics", "euler_rhs",
    "initial_condition", "integrate", "phi_rhs", "step", "zakharov_rhs", "zakharov_solve_S",
    "ModeBox", "OperatorMatrix", "SpectrumReport", "assemble_operator", "eigendecompose",
    "eigenfunction_transport_check", "spectrum_along_flow",
    "ResidualReport",
    "bracket_identity_suite", "compatibility_residual", "conservation_suite", "zakharov_residual",
]
