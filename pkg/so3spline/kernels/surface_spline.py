"""Surface-spline kernels k_m(x, y) = sin(d(x, y)/2)^(2m-3) on SO(3).

The kernel of order m is conditionally positive (sigma = (-1)^(m-1)) definite of
order l0 = m - 2 and is the Green's function of the differential operator L_m,
a polynomial of degree m in the Laplace-Beltrami operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from loguru import logger
from scipy.special import comb, roots_legendre

from so3spline.errors import InvalidArgumentError
from so3spline.rotations.group import (
    Rotation,
    as_quaternions,
    distance,
    pairwise_half_sines,
    row_block,
)
from so3spline.rotations.quadrature import QuadratureRule, class_quadrature, haar_quadrature
from so3spline.wigner.chebyshev import character_from_angle, chebyshev_u_table
from so3spline.wigner.transform import (
    FourierCoefficients,
    fourier_analyze,
    fourier_synthesize,
    synthesizer,
)

DEFAULT_SERIES_TRUNCATION = 400
DEFAULT_CLASS_NODES = 2000


@dataclass(frozen=True)
class KernelOrder:
    """Order m >= 2 of a surface-spline kernel."""

    m: int

    def __post_init__(self) -> None:
        if isinstance(self.m, bool) or not isinstance(self.m, (int, np.integer)) or self.m < 2:
            raise InvalidArgumentError(f"Kernel order must be an integer >= 2, got {self.m!r}")
        object.__setattr__(self, "m", int(self.m))

    @property
    def exponent(self) -> int:
        """2m - 3."""
        return 2 * self.m - 3

    @property
    def s(self) -> float:
        """Smoothness index m - 3/2."""
        return self.m - 1.5

    @property
    def cpd_order(self) -> int:
        """l0 = m - 2."""
        return self.m - 2

    @property
    def sign(self) -> int:
        """sigma = (-1)^(m-1)."""
        return -1 if self.m % 2 == 0 else 1

    @property
    def roots(self) -> np.ndarray:
        """Roots r_j = j^2 - 1/4 (j = 0..m-1) of the symbol of L_m in nu = l(l+1)."""
        j = np.arange(self.m)
        return j * j - 0.25


def _order(order: KernelOrder | int) -> KernelOrder:
    return order if isinstance(order, KernelOrder) else KernelOrder(order)


# ---------------------------------------------------------------------------
# Kernel evaluation
# ---------------------------------------------------------------------------


def kernel_values(order: KernelOrder | int, distances: Any) -> np.ndarray:
    """k_m as a function of the distance, vectorized."""
    o = _order(order)
    return np.sin(np.asarray(distances, dtype=float) / 2.0) ** o.exponent


def kernel_eval(order: KernelOrder | int, x: Rotation, alpha: Rotation) -> float:
    """k_m(x, alpha) = sin(d(x, alpha)/2)^(2m-3)."""
    return float(kernel_values(order, distance(x, alpha)))


def kernel_matrix(order: KernelOrder | int, x: Any, y: Any, chunk: int = 4096) -> np.ndarray:
    """Matrix k_m(x_i, y_j), shape (N, M), from quaternion half-angle sines."""
    o = _order(order)
    qx, qy = as_quaternions(x), as_quaternions(y)
    out = np.empty((qx.shape[0], qy.shape[0]))
    chunk = row_block(chunk, qy.shape[0])
    for start in range(0, qx.shape[0], chunk):
        out[start : start + chunk] = pairwise_half_sines(qx[start : start + chunk], qy) ** o.exponent
    return out


# ---------------------------------------------------------------------------
# Chebyshev coefficients and the symbol of L_m
# ---------------------------------------------------------------------------


def kernel_cheb_coeff(order: KernelOrder | int, ell: Any) -> Any:
    """Coefficient k~_m(l) of the character expansion k_m = sum_l k~_m(l) c_l.

    k~_m(l) = (2/pi) (2m-2)! / (-4)^(m-1) * prod_{j=-(m-1)}^{m-1} 1/(l + j + 1/2),
    accumulated as a running product so no factorial is formed.
    """
    o = _order(order)
    l_arr = np.asarray(ell, dtype=float)
    if np.any(l_arr < 0):
        raise InvalidArgumentError("Degree must be non-negative")
    m = o.m
    val = np.full(l_arr.shape, 2.0 / math.pi) / (l_arr + m - 0.5)
    for i in range(1, 2 * m - 1):
        val = val * (i / (l_arr + (i - m) + 0.5))
        if i <= m - 1:
            val = val * -0.25
    return float(val) if val.ndim == 0 else val


def lm_symbol(order: KernelOrder | int, ell: Any) -> Any:
    """p_m(nu) = pi (-4)^(m-1)/(2m-2)! * prod_j (nu - r_j) with nu = l(l+1)."""
    o = _order(order)
    l_arr = np.asarray(ell, dtype=float)
    nu = l_arr * (l_arr + 1.0)
    val = np.full(l_arr.shape, math.pi * (-4.0) ** (o.m - 1) / math.factorial(2 * o.m - 2))
    for r in o.roots:
        val = val * (nu - r)
    return float(val) if val.ndim == 0 else val


@dataclass(frozen=True)
class ChebSeries:
    """Table k~_m(l), l = 0..max_degree, of one kernel order."""

    order: KernelOrder
    values: np.ndarray

    @classmethod
    def compute(cls, order: KernelOrder | int, max_degree: int) -> "ChebSeries":
        if max_degree < 0:
            raise InvalidArgumentError(f"max_degree must be non-negative, got {max_degree}")
        o = _order(order)
        values = np.atleast_1d(kernel_cheb_coeff(o, np.arange(max_degree + 1)))
        values.setflags(write=False)
        return cls(o, values)

    @property
    def max_degree(self) -> int:
        return self.values.size - 1

    def sign_is_stable(self) -> bool:
        """Whether sigma * k~_m(l) > 0 for every tabulated l > l0."""
        tail = self.values[self.order.cpd_order + 1 :]
        return bool(np.all(self.order.sign * tail > 0))

    def evaluate(self, omega: Any) -> np.ndarray:
        """Partial sum sum_l k~_m(l) c_l(omega) of the character expansion."""
        t = np.cos(np.asarray(omega, dtype=float) / 2.0)
        table = chebyshev_u_table(2 * self.max_degree, t)
        return np.tensordot(self.values, table[0::2], axes=1)

    def rows(self) -> list[tuple[int, float]]:
        return [(ell, float(v)) for ell, v in enumerate(self.values)]


def apply_lm(order: KernelOrder | int, coeffs: FourierCoefficients) -> FourierCoefficients:
    """Coefficients of L_m f: every degree-l block scaled by p_m(l(l+1))."""
    symbols = lm_symbol(order, np.arange(coeffs.band_limit + 1))
    return coeffs.scale_bands(np.atleast_1d(symbols))


def cpd_data(order: KernelOrder | int) -> tuple[int, int]:
    """(l0, sigma): conditional definiteness order and sign."""
    o = _order(order)
    return o.cpd_order, o.sign


def kernel_series_eval(
    order: KernelOrder | int,
    x: Rotation,
    alpha: Rotation,
    truncation: int = DEFAULT_SERIES_TRUNCATION,
) -> float:
    """Truncated expansion sum_{l<=N} k~_m(l) U_2l(cos(d/2))."""
    u = math.cos(distance(x, alpha) / 2.0)
    table = chebyshev_u_table(2 * truncation, u)
    coeffs = kernel_cheb_coeff(order, np.arange(truncation + 1))
    return float(np.dot(coeffs, table[::2]))


# ---------------------------------------------------------------------------
# Independent checks
# ---------------------------------------------------------------------------


def cheb_coeff_oracle(
    order: KernelOrder | int, ell: int, nodes: int | None = None, method: str = "legendre"
) -> float:
    """k~_m(l) by 1-D quadrature of the class-function integral.

    ``legendre``: k~_m(l) = (4/pi) int_0^{pi/2} sin(t)^(2m-2) sin((2l+1) t) dt
    by Gauss-Legendre. ``class``: int k_m(omega) c_l(omega) against the angle
    density with the class-function rule; only algebraically convergent, since
    k_m is not a polynomial in cos(omega/2).
    """
    o = _order(order)
    if ell < 0:
        raise InvalidArgumentError("Degree must be non-negative")
    if method == "class":
        rule = class_quadrature(2 * (nodes or DEFAULT_CLASS_NODES) - 2)
        return rule.integrate(lambda w: kernel_values(o, w) * character_from_angle(ell, w))
    if method != "legendre":
        raise InvalidArgumentError(f"Unknown method: {method}. Supported: legendre, class")
    if nodes is None:
        nodes = 2 * ell + 2 * o.m + 40
    x, w = roots_legendre(nodes)
    t = (x + 1.0) * (math.pi / 4.0)
    integrand = np.sin(t) ** (2 * o.m - 2) * np.sin((2 * ell + 1) * t)
    return float((4.0 / math.pi) * (math.pi / 4.0) * np.dot(w, integrand))


def difference_sum(M: int, L: float) -> float:
    """sum_{j=0}^{M} (-1)^j C(M, j) / (L + j)."""
    j = np.arange(M + 1)
    return float(np.sum((-1.0) ** j * comb(M, j) / (L + j)))


def difference_closed_form(M: int, L: float) -> float:
    """M! / (L (L+1) ... (L+M))."""
    val = 1.0
    for j in range(M + 1):
        val *= (j if j > 0 else 1) / (L + j)
    return val


def cheb_coeff_by_differences(order: KernelOrder | int, ell: int) -> float:
    """k~_m(l) as (2/pi)(-1/4)^(m-1) times an alternating binomial sum."""
    o = _order(order)
    M = 2 * o.m - 2
    return (2.0 / math.pi) * (-0.25) ** (o.m - 1) * difference_sum(M, ell - o.m + 1.5)


def greens_reproduction(
    order: KernelOrder | int,
    f_coeffs: FourierCoefficients,
    x: Any,
    truncation: int = DEFAULT_SERIES_TRUNCATION,
    rule: QuadratureRule | None = None,
    method: str = "spectral",
) -> np.ndarray:
    """Evaluate int k_m(x, a) (L_m f)(a) dmu(a); equals f(x) for band-limited f.

    ``spectral`` analyzes L_m f on a rule exact for the product with D-functions
    and applies the truncated addition formula; ``direct`` sums the closed-form
    kernel against L_m f over the rule nodes.
    """
    o = _order(order)
    n = f_coeffs.band_limit
    g_coeffs = apply_lm(o, f_coeffs)
    if method == "spectral":
        rule = rule or haar_quadrature(2 * n)
        g_hat = fourier_analyze(synthesizer(g_coeffs, real=False), n, rule)
        ell = np.arange(n + 1)
        factors = np.where(ell <= truncation, kernel_cheb_coeff(o, ell) / (2 * ell + 1), 0.0)
        return np.asarray(fourier_synthesize(g_hat.scale_bands(factors), x))
    if method == "direct":
        if rule is None:
            raise InvalidArgumentError("The direct method needs an explicit quadrature rule")
        g_values = np.asarray(fourier_synthesize(g_coeffs, rule.matrices))
        result = kernel_matrix(o, x, rule) @ (rule.weights * g_values)
        logger.debug(f"Direct Green's quadrature on {len(rule)} nodes")
        return result
    raise InvalidArgumentError(f"Unknown method: {method}. Supported: spectral, direct")
