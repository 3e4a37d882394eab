"""Numerical laboratory for the mass-conserved Allen-Cahn equation and its
sharp-interface limit, volume-preserving mean curvature flow."""

__version__ = "0.1.0"

from .potential import DoubleWell, make_cubic, validate_wells, energy_density
from .profile import (
    WaveProfile,
    CorrectorProfile,
    compute_theta0,
    compute_theta1,
    decay_rate,
    solve_linearized,
)

__all__ = [
    "DoubleWell",
    "make_cubic",
    "validate_wells",
    "energy_density",
    "WaveProfile",
    "CorrectorProfile",
    "compute_theta0",
    "compute_theta1",
    "decay_rate",
    "solve_linearized",
]
