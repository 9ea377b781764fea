"""Root-neighborhood forward equations on unimodular Galton-Watson trees."""

from .configs import (
    ConfigSpace,
    LawVector,
    NeighborhoodConfig,
    build_initial_law,
    class_count,
    enumerate_configs,
    marginalize,
)
from .integrator import Trajectory, dopri5, output_grid, rk4
from .meanfield import mean_field_ode
from .ode import LocalFieldODE, ODESolution, integrate, ode_rhs, psi

__all__ = [
    "ConfigSpace",
    "LawVector",
    "NeighborhoodConfig",
    "build_initial_law",
    "class_count",
    "enumerate_configs",
    "marginalize",
    "Trajectory",
    "dopri5",
    "output_grid",
    "rk4",
    "mean_field_ode",
    "LocalFieldODE",
    "ODESolution",
    "integrate",
    "ode_rhs",
    "psi",
]
