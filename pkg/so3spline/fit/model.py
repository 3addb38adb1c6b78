"""Spline models s(x) = sum_xi alpha_xi k_m(x, xi) + sum beta_{l,k,m} D^l_{k,m}(x)."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Mapping

import numpy as np

from so3spline.errors import InvalidArgumentError
from so3spline.kernels.surface_spline import KernelOrder, kernel_cheb_coeff, kernel_matrix
from so3spline.rotations.group import Rotation, as_matrices, matrices_to_quaternions, row_block
from so3spline.wigner.dfunctions import basis_size, wigner_basis, wigner_indices
from so3spline.wigner.transform import FourierCoefficients

ORDERING_TAG = "l-k-m"
EVALUATION_CHUNK = 4096


@dataclass(frozen=True, eq=False)
class SplineModel:
    """Kernel coefficients ``alpha`` on ``centers`` plus polynomial part ``beta`` in Pi_l0.

    ``beta`` is indexed in (l, k, m) ascending order, recorded by ``ordering``.
    """

    order: KernelOrder
    centers: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    beta: np.ndarray = field(repr=False)
    ordering: str = ORDERING_TAG
    info: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        centers = np.array(as_matrices(self.centers), dtype=float)
        alpha = np.array(self.alpha, dtype=complex).reshape(-1)
        beta = np.array(self.beta, dtype=complex).reshape(-1)
        if alpha.shape[0] != centers.shape[0]:
            raise InvalidArgumentError(
                f"alpha has {alpha.shape[0]} entries for {centers.shape[0]} centers"
            )
        expected = basis_size(self.order.cpd_order)
        if beta.shape[0] != expected:
            raise InvalidArgumentError(f"beta must have {expected} entries, got {beta.shape[0]}")
        if self.ordering != ORDERING_TAG:
            raise InvalidArgumentError(f"Unsupported coefficient ordering: {self.ordering}")
        for arr in (centers, alpha, beta):
            arr.setflags(write=False)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @cached_property
    def quaternions(self) -> np.ndarray:
        return matrices_to_quaternions(self.centers)

    @property
    def polynomial_degree(self) -> int:
        return self.order.cpd_order

    def __len__(self) -> int:
        return self.centers.shape[0]

    def _check_compatible(self, other: "SplineModel") -> None:
        if self.order != other.order or not np.array_equal(self.centers, other.centers):
            raise InvalidArgumentError("Models must share kernel order and centers")

    def __add__(self, other: "SplineModel") -> "SplineModel":
        self._check_compatible(other)
        return SplineModel(self.order, self.centers, self.alpha + other.alpha, self.beta + other.beta)

    def __mul__(self, scalar: complex) -> "SplineModel":
        return SplineModel(self.order, self.centers, self.alpha * scalar, self.beta * scalar)

    __rmul__ = __mul__


def evaluate_model(model: SplineModel, x: Any) -> Any:
    """Evaluate the model at a rotation (complex scalar) or at a stack of rotations."""
    matrices = as_matrices(x)
    step = row_block(EVALUATION_CHUNK, model.quaternions.shape[0])
    values = np.empty(matrices.shape[0], dtype=complex)
    for start in range(0, matrices.shape[0], step):
        k = kernel_matrix(model.order, matrices[start : start + step], model.quaternions)
        values[start : start + step] = k @ model.alpha
    values = values + wigner_basis(matrices, model.polynomial_degree) @ model.beta
    single = isinstance(x, Rotation) or np.shape(x) == (3, 3)
    return complex(values[0]) if single else values


def model_fourier_coefficients(model: SplineModel, band: int) -> FourierCoefficients:
    """Exact Fourier coefficients of a model up to ``band`` via the addition formula.

    The kernel part contributes k~(l)/sqrt(2l+1) * sum_xi alpha_xi conj(D^l(xi));
    the polynomial part contributes beta/sqrt(2l+1).
    """
    ell = wigner_indices(band)[:, 0]
    scale = 1.0 / np.sqrt(2.0 * ell + 1.0)
    k_tilde = np.atleast_1d(kernel_cheb_coeff(model.order, np.arange(band + 1)))
    basis = wigner_basis(model.centers, band)
    values = k_tilde[ell] * scale * (basis.conj().T @ model.alpha)
    p = min(model.beta.shape[0], values.shape[0])
    values[:p] += model.beta[:p] * scale[:p]
    return FourierCoefficients(band, values)
