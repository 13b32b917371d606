"""Ground states of -div(|x|^2a grad u) + omega*u = u^(p-1): solver and verification toolkit."""

from .params import (
    ProblemParams,
    ScalingMap,
    critical_exponent,
    normalize_omega,
    validate,
)
from .radial_ode import (
    IntegrationEvent,
    IntegratorConfig,
    RadialGrid,
    RadialProfile,
    Tail,
    integrate,
    make_grid,
    ode_rhs,
    residual,
    series_start,
)

__all__ = [
    "ProblemParams",
    "ScalingMap",
    "critical_exponent",
    "normalize_omega",
    "validate",
    "IntegrationEvent",
    "IntegratorConfig",
    "RadialGrid",
    "RadialProfile",
    "Tail",
    "integrate",
    "make_grid",
    "ode_rhs",
    "residual",
    "series_start",
]

__version__ = "0.1.0"
