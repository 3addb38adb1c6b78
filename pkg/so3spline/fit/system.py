"""Saddle-point systems for surface-spline interpolation."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from loguru import logger
from scipy.linalg import LinAlgWarning, get_lapack_funcs, lu_factor, lu_solve

from so3spline.errors import ConditioningError, InvalidArgumentError, UnisolvencyError
from so3spline.fit.model import ORDERING_TAG
from so3spline.kernels.surface_spline import KernelOrder, kernel_matrix
from so3spline.rotations.group import as_matrices, as_quaternions
from so3spline.wigner.dfunctions import DEFAULT_DEGREE_CAP, basis_size, wigner_basis

DEFAULT_CONDITION_LIMIT = 1e14
DEFAULT_RANK_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class SaddleSystem:
    """Blocks of [[A, B^T], [B, 0]] for centers Xi and kernel order m.

    ``A`` is the real kernel matrix k_m(xi_i, xi_j); ``B`` has one row per
    D^l_{k,m} with l <= l0, ordered by (l, k, m).
    """

    order: KernelOrder
    centers: np.ndarray = field(repr=False)
    A: np.ndarray = field(repr=False)
    B: np.ndarray = field(repr=False)
    ordering: str = ORDERING_TAG

    @property
    def n_centers(self) -> int:
        return self.A.shape[0]

    @property
    def n_moments(self) -> int:
        return self.B.shape[0]

    def matrix(self, shift: float = 0.0) -> np.ndarray:
        """Full saddle matrix with ``shift`` added to the diagonal of A."""
        n, p = self.n_centers, self.n_moments
        out = np.zeros((n + p, n + p), dtype=complex)
        out[:n, :n] = self.A + shift * np.eye(n)
        out[:n, n:] = self.B.T
        out[n:, :n] = self.B
        return out


def _numerical_rank(matrix: np.ndarray, tolerance: float) -> int:
    if matrix.size == 0:
        return 0
    s = np.linalg.svd(matrix, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > tolerance * s[0]))


def check_unisolvency(
    B: np.ndarray, max_degree: int, tolerance: float = DEFAULT_RANK_TOLERANCE
) -> None:
    """Raise UnisolvencyError naming the first degree whose rows are rank deficient."""
    for degree in range(max_degree + 1):
        rows = basis_size(degree)
        if B.shape[1] < rows or _numerical_rank(B[:rows], tolerance) < rows:
            raise UnisolvencyError(
                degree,
                f"{B.shape[1]} centers do not determine Pi_{degree} "
                f"(needs {rows} independent evaluations)",
            )


def assemble_system(
    points: Any,
    order: KernelOrder | int,
    rank_tolerance: float = DEFAULT_RANK_TOLERANCE,
    degree_cap: int = DEFAULT_DEGREE_CAP,
) -> SaddleSystem:
    """Kernel and moment blocks for the centers ``points``."""
    o = order if isinstance(order, KernelOrder) else KernelOrder(order)
    centers = np.array(as_matrices(points), dtype=float)
    if centers.shape[0] == 0:
        raise InvalidArgumentError("At least one center is required")
    quaternions = as_quaternions(points)
    A = kernel_matrix(o, quaternions, quaternions)
    B = wigner_basis(points, o.cpd_order, degree_cap).T
    check_unisolvency(B, o.cpd_order, rank_tolerance)
    logger.debug(f"Assembled saddle system: n={centers.shape[0]}, P={B.shape[0]}, m={o.m}")
    return SaddleSystem(o, centers, A, B)


@dataclass(frozen=True)
class FactoredSystem:
    """LU factors of a saddle matrix with its 1-norm condition estimate."""

    lu: np.ndarray = field(repr=False)
    piv: np.ndarray = field(repr=False)
    condition: float

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return lu_solve((self.lu, self.piv), rhs, check_finite=False)


def factor_saddle(
    system: SaddleSystem,
    shift: float = 0.0,
    condition_limit: float = DEFAULT_CONDITION_LIMIT,
) -> FactoredSystem:
    """LU-factor the saddle matrix; ConditioningError above ``condition_limit``."""
    M = system.matrix(shift)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(M, check_finite=False)
    (gecon,) = get_lapack_funcs(("gecon",), (lu,))
    rcond, _ = gecon(lu, np.linalg.norm(M, 1), norm="1")
    condition = float(np.inf) if rcond == 0 or not np.isfinite(rcond) else 1.0 / float(rcond)
    logger.debug(f"Saddle condition estimate {condition:.3e} (size {M.shape[0]})")
    if condition > condition_limit:
        raise ConditioningError(condition, condition_limit, what="Saddle system")
    return FactoredSystem(lu, piv, condition)
