"""Harmonic analysis on SO(3): Wigner D-functions, characters and Fourier transforms."""

from __future__ import annotations

from so3spline.wigner.chebyshev import (
    character,
    character_from_angle,
    chebyshev_u,
    chebyshev_u_table,
)
from so3spline.wigner.dfunctions import (
    DEFAULT_DEGREE_CAP,
    basis_size,
    laplace_eigenvalue,
    small_d,
    wigner_basis,
    wigner_d,
    wigner_d_matrix,
    wigner_indices,
)
from so3spline.wigner.transform import (
    FourierCoefficients,
    fourier_analyze,
    fourier_synthesize,
    geodesic_excess_energy,
    synthesizer,
)

__all__ = [
    "DEFAULT_DEGREE_CAP",
    "FourierCoefficients",
    "basis_size",
    "character",
    "character_from_angle",
    "chebyshev_u",
    "chebyshev_u_table",
    "fourier_analyze",
    "fourier_synthesize",
    "geodesic_excess_energy",
    "laplace_eigenvalue",
    "small_d",
    "synthesizer",
    "wigner_basis",
    "wigner_d",
    "wigner_d_matrix",
    "wigner_indices",
]
