"""Numerical laboratory for parabolic Schwarz-symmetrization comparisons.

Solves ``u_t - Δu = f`` with zero Dirichlet data on flat, conical and
spherical 2-D domains, builds the symmetrized ball problem, and checks that
the concentration of ``u`` never exceeds that of the symmetrized solution.
"""

from .errors import ConfigError, DomainError, ExpressionError, SolverError
from .geometry import (
    ModelSpace,
    SymmetrizationTarget,
    ball_radius,
    ball_volume,
    isoperimetric_profile,
    sphere_area,
    theta_for_cone,
    unit_ball_volume,
)
from .rearrangement import (
    RadialProfile,
    StepFunction,
    WeightedField,
    concentration,
    decreasing_rearrangement,
    distribution_function,
    hardy_littlewood_pair,
    rearrangement_value,
    schwarz_profile,
    truncated_concentration_bound,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DomainError",
    "ExpressionError",
    "SolverError",
    "ModelSpace",
    "SymmetrizationTarget",
    "ball_radius",
    "ball_volume",
    "isoperimetric_profile",
    "sphere_area",
    "theta_for_cone",
    "unit_ball_volume",
    "RadialProfile",
    "StepFunction",
    "WeightedField",
    "concentration",
    "decreasing_rearrangement",
    "distribution_function",
    "hardy_littlewood_pair",
    "rearrangement_value",
    "schwarz_profile",
    "truncated_concentration_bound",
]
