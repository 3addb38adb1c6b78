"""Error kernel e(x, alpha) = |k_m(x, alpha) - sum_xi a(xi, alpha) k_m(x, xi)| and its bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.spatial.transform import Rotation as _ScipyRotation

from so3spline.errors import InvalidArgumentError
from so3spline.kernels.surface_spline import KernelOrder, kernel_matrix
from so3spline.localize.coefficients import CoefficientKernel
from so3spline.rotations.group import Rotation, as_matrices, as_quaternions, pairwise_distances


def _as_order(order: KernelOrder | int) -> KernelOrder:
    return order if isinstance(order, KernelOrder) else KernelOrder(order)


def error_kernel_profile(
    order: KernelOrder | int, ck: CoefficientKernel, alpha: Rotation, xs: Any
) -> np.ndarray:
    """e(x, alpha) for a stack of rotations x."""
    o = _as_order(order)
    vec = ck.weights(alpha)
    qx = as_quaternions(as_matrices(xs))
    direct = kernel_matrix(o, qx, alpha.matrix[None, :, :])[:, 0]
    local = kernel_matrix(o, qx, ck.quaternions[vec.indices]) @ vec.weights
    return np.abs(direct - local)


def error_kernel_eval(
    order: KernelOrder | int, ck: CoefficientKernel, x: Rotation, alpha: Rotation
) -> float:
    return float(error_kernel_profile(order, ck, alpha, x.matrix[None, :, :])[0])


def near_field_bound(order: KernelOrder | int, stability: float, radius: float) -> float:
    """Bound (3/2)^(2m-1) K rho^(2m-3) valid for d(x, alpha) <= 2 rho."""
    o = _as_order(order)
    return 1.5 ** (2 * o.m - 1) * stability * radius ** o.exponent


def taylor_replacement_bound(
    order: KernelOrder | int, ck: CoefficientKernel, x: Rotation, alpha: Rotation
) -> float:
    """||a||_1 / (L+1)! * |I_x|^(L+1) * max_{t in I_x} |theta_s^(L+1)(t)|.

    With t = cos^2(d/2) the kernel is theta_s(t) = (1 - t)^s, s = m - 3/2, and
    I_x is the smallest interval holding t_x(alpha) and t_x(xi) over the support.
    """
    o = _as_order(order)
    vec = ck.weights(alpha)
    L = ck.precision
    targets = np.concatenate([as_quaternions(alpha), ck.quaternions[vec.indices]])
    d = pairwise_distances(x.matrix[None, :, :], targets)[0]
    t = np.cos(d / 2.0) ** 2
    lo, hi = float(t.min()), float(t.max())
    width = hi - lo
    if width == 0.0:
        return 0.0

    s = o.s
    falling = abs(math.prod(s - i for i in range(L + 1)))
    if falling == 0.0:
        return 0.0
    power = s - L - 1
    if power >= 0:
        deriv = falling * (1.0 - lo) ** power
    elif hi >= 1.0:
        return math.inf
    else:
        deriv = falling * (1.0 - hi) ** power
    return vec.l1_norm / math.factorial(L + 1) * width ** (L + 1) * deriv


@dataclass(frozen=True)
class DecayFit:
    """Far-field decay: per-annulus maxima against 1 + d/rho and the fitted log-log slope."""

    slope: float
    intercept: float
    scaled_distance: np.ndarray
    maxima: np.ndarray


def annulus_maxima(
    order: KernelOrder | int,
    ck: CoefficientKernel,
    alpha: Rotation,
    bins: int = 6,
    per_bin: int = 64,
    inner: float = 2.0,
    outer: float | None = None,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Maximal error on geometric annuli between ``inner`` * rho and ``outer``."""
    rho = ck.radius
    lo = inner * rho
    hi = min(outer if outer is not None else 0.95 * math.pi, math.pi)
    if lo >= hi:
        raise InvalidArgumentError(
            f"Annuli need inner radius {lo:.4g} below outer radius {hi:.4g}; reduce rho"
        )
    rng = np.random.default_rng(seed)
    edges = np.geomspace(lo, hi, bins + 1)
    positions, maxima = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        axes = rng.standard_normal((per_bin, 3))
        axes /= np.linalg.norm(axes, axis=1, keepdims=True)
        dists = rng.uniform(a, b, per_bin)
        steps = _ScipyRotation.from_rotvec(axes * dists[:, None]).as_matrix()
        xs = alpha.matrix[None, :, :] @ steps
        errors = error_kernel_profile(order, ck, alpha, xs)
        k = int(np.argmax(errors))
        positions.append(1.0 + dists[k] / rho)
        maxima.append(errors[k])
    return np.asarray(positions), np.asarray(maxima)


def decay_slope(
    order: KernelOrder | int,
    ck: CoefficientKernel,
    alpha: Rotation,
    bins: int = 6,
    per_bin: int = 64,
    seed: int = 0,
) -> DecayFit:
    """Least-squares slope of log(max e) against log(1 + d/rho) over the far field."""
    positions, maxima = annulus_maxima(order, ck, alpha, bins=bins, per_bin=per_bin, seed=seed)
    floor = np.finfo(float).tiny
    slope, intercept = np.polyfit(np.log(positions), np.log(np.maximum(maxima, floor)), 1)
    return DecayFit(float(slope), float(intercept), positions, maxima)
