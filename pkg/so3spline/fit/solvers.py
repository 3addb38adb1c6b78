"""Interpolation, regularized fitting and least squares in the spline space S_Xi."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Union

import numpy as np
from loguru import logger
from scipy.linalg import solve

from so3spline.errors import ConditioningError, InvalidArgumentError
from so3spline.fit.model import SplineModel, evaluate_model, model_fourier_coefficients
from so3spline.fit.system import (
    DEFAULT_CONDITION_LIMIT,
    DEFAULT_RANK_TOLERANCE,
    SaddleSystem,
    assemble_system,
    factor_saddle,
)
from so3spline.kernels.surface_spline import KernelOrder, kernel_cheb_coeff, kernel_matrix
from so3spline.observability import trace_stage
from so3spline.rotations.quadrature import QuadratureRule, haar_quadrature
from so3spline.wigner.dfunctions import wigner_basis, wigner_indices
from so3spline.wigner.transform import fourier_analyze

DEFAULT_LSQ_DEGREE = 24
DEFAULT_SEMINORM_BAND = 16

Target = Union[Callable[[np.ndarray], Any], np.ndarray]


def _as_order(order: KernelOrder | int) -> KernelOrder:
    return order if isinstance(order, KernelOrder) else KernelOrder(order)


def _data_vector(y: Any, n: int) -> np.ndarray:
    values = np.asarray(y, dtype=complex).reshape(-1)
    if values.shape[0] != n:
        raise InvalidArgumentError(f"Expected {n} data values, got {values.shape[0]}")
    if not np.all(np.isfinite(values)):
        raise InvalidArgumentError("Data values must be finite")
    return values


def _solve_with_shift(
    system: SaddleSystem, y: np.ndarray, shift: float, condition_limit: float
) -> SplineModel:
    n = system.n_centers
    factored = factor_saddle(system, shift=shift, condition_limit=condition_limit)
    rhs = np.concatenate([y, np.zeros(system.n_moments, dtype=complex)])
    solution = factored.solve(rhs)
    return SplineModel(
        system.order,
        system.centers,
        solution[:n],
        solution[n:],
        info={"condition": factored.condition},
    )


def interpolate(
    points: Any,
    y: Any,
    order: KernelOrder | int,
    condition_limit: float = DEFAULT_CONDITION_LIMIT,
    rank_tolerance: float = DEFAULT_RANK_TOLERANCE,
) -> SplineModel:
    """Unique s in S_Xi with s(xi) = y_xi, from the saddle system [[A, B^T], [B, 0]]."""
    o = _as_order(order)
    with trace_stage("interpolate", m=o.m):
        system = assemble_system(points, o, rank_tolerance=rank_tolerance)
        model = _solve_with_shift(system, _data_vector(y, system.n_centers), 0.0, condition_limit)
    logger.info(f"Interpolated {system.n_centers} values with m={o.m}")
    return model


def tikhonov_fit(
    points: Any,
    y: Any,
    order: KernelOrder | int,
    lam: float,
    orientation: str = "native",
    condition_limit: float = DEFAULT_CONDITION_LIMIT,
    rank_tolerance: float = DEFAULT_RANK_TOLERANCE,
) -> SplineModel:
    """Minimize sum |s(xi) - y|^2 + lam * |s|_N^2 over S_Xi.

    ``native`` shifts A by sigma*lam, which is the minimizer when |s|_N^2 =
    sigma * alpha^H A alpha; ``literal`` shifts A by lam regardless of sigma.
    """
    if not (np.isfinite(lam) and lam > 0):
        raise InvalidArgumentError(f"Regularization parameter must be > 0, got {lam}")
    o = _as_order(order)
    if orientation == "native":
        shift = o.sign * lam
    elif orientation == "literal":
        shift = lam
    else:
        raise InvalidArgumentError(f"Unknown orientation: {orientation}. Supported: native, literal")
    with trace_stage("tikhonov_fit", m=o.m, lam=lam):
        system = assemble_system(points, o, rank_tolerance=rank_tolerance)
        model = _solve_with_shift(system, _data_vector(y, system.n_centers), shift, condition_limit)
    return model


def least_squares_fit(
    points: Any,
    f: Target,
    order: KernelOrder | int,
    rule: QuadratureRule | None = None,
    quadrature_degree: int = DEFAULT_LSQ_DEGREE,
    condition_limit: float = DEFAULT_CONDITION_LIMIT,
    rank_tolerance: float = DEFAULT_RANK_TOLERANCE,
) -> SplineModel:
    """L2 projection of f onto S_Xi in the inner product induced by ``rule``.

    The basis of S_Xi is the family of Lagrange functions (cardinal
    interpolants); ``f`` is a callable on node matrices or its values at the nodes.
    """
    o = _as_order(order)
    rule = rule or haar_quadrature(quadrature_degree)
    with trace_stage("least_squares_fit", m=o.m, nodes=len(rule)):
        system = assemble_system(points, o, rank_tolerance=rank_tolerance)
        n, p = system.n_centers, system.n_moments
        factored = factor_saddle(system, condition_limit=condition_limit)
        cardinal = factored.solve(np.vstack([np.eye(n), np.zeros((p, n))]).astype(complex))
        c_alpha, c_beta = cardinal[:n], cardinal[n:]

        basis = kernel_matrix(o, rule, system.centers) @ c_alpha
        basis = basis + wigner_basis(rule, o.cpd_order) @ c_beta
        values = f(rule.matrices) if callable(f) else f
        values = _data_vector(values, len(rule))

        weighted = basis.conj().T * rule.weights[None, :]
        gram = weighted @ basis
        rhs = weighted @ values
        condition = float(np.linalg.cond(gram))
        if condition > condition_limit:
            raise ConditioningError(condition, condition_limit, what="Gram matrix")
        coeffs = solve(gram, rhs, assume_a="her")
    logger.debug(f"Least-squares Gram condition {condition:.3e}")
    return SplineModel(
        o, system.centers, c_alpha @ coeffs, c_beta @ coeffs, info={"gram_condition": condition}
    )


# ---------------------------------------------------------------------------
# Native-space seminorm
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SeminormEstimate:
    """Truncated native seminorm (squared) and the remainder above ``band``."""

    value: float
    tail: float
    band: int

    @property
    def total(self) -> float:
        return self.value + self.tail


def native_seminorm_exact(model: SplineModel) -> float:
    """|s|_N^2 = sigma * alpha^H A alpha (moment conditions remove the polynomial part)."""
    A = kernel_matrix(model.order, model.quaternions, model.quaternions)
    return float(model.order.sign * np.real(np.vdot(model.alpha, A @ model.alpha)))


def _character_energies(model: SplineModel, max_degree: int) -> np.ndarray:
    """alpha^H C_l alpha for l = 0..max_degree, C_l = [c_l(d(xi, zeta))]."""
    q = model.quaternions
    u = np.minimum(np.abs(q @ q.T), 1.0)
    u2 = 2.0 * u
    alpha = model.alpha
    out = np.empty(max_degree + 1)
    prev, cur = np.zeros_like(u), np.ones_like(u)
    for j in range(2 * max_degree + 1):
        if j % 2 == 0:
            out[j // 2] = float(np.real(np.vdot(alpha, cur @ alpha)))
        prev, cur = cur, u2 * cur - prev
    return out


def native_seminorm(
    model: SplineModel,
    band: int = DEFAULT_SEMINORM_BAND,
    weighting: str = "native",
    method: str = "exact",
    rule: QuadratureRule | None = None,
    truncation: int = 400,
) -> SeminormEstimate:
    """sum_{l0 < l <= band} w_l |shat^l|^2 plus the remainder beyond ``band``.

    ``native`` weights are (2l+1)/|k~(l)| (the norm minimized by tikhonov_fit);
    ``literal`` weights are 1/|k~(l)|. Coefficients come from the addition
    formula (``exact``) or from fourier_analyze of the evaluated model
    (``quadrature``).
    """
    o = model.order
    l0 = o.cpd_order
    if weighting not in ("native", "literal"):
        raise InvalidArgumentError(f"Unknown weighting: {weighting}. Supported: native, literal")
    if method == "exact":
        coeffs = model_fourier_coefficients(model, band)
    elif method == "quadrature":
        rule = rule or haar_quadrature(2 * band)
        coeffs = fourier_analyze(lambda x: evaluate_model(model, x), band, rule)
    else:
        raise InvalidArgumentError(f"Unknown method: {method}. Supported: exact, quadrature")

    ell = wigner_indices(band)[:, 0]
    energy = np.bincount(ell, weights=np.abs(coeffs.values) ** 2, minlength=band + 1)
    degrees = np.arange(band + 1)
    k_abs = np.abs(np.atleast_1d(kernel_cheb_coeff(o, degrees)))
    weights = (2 * degrees + 1) / k_abs if weighting == "native" else 1.0 / k_abs
    mask = degrees > l0
    value = float(np.sum((weights * energy)[mask]))

    if weighting == "native":
        energies = _character_energies(model, band)
        inside = float(np.sum((k_abs * energies)[mask]))
        tail = max(native_seminorm_exact(model) - inside, 0.0)
    else:
        energies = _character_energies(model, truncation)
        all_degrees = np.arange(truncation + 1)
        k_all = np.abs(np.atleast_1d(kernel_cheb_coeff(o, all_degrees)))
        beyond = all_degrees > max(band, l0)
        tail = float(np.sum((k_all / (2 * all_degrees + 1) * energies)[beyond]))
    return SeminormEstimate(value, tail, band)
