"""Chebyshev polynomials of the second kind and the characters of SO(3)."""

from __future__ import annotations

from typing import Any

import numpy as np

from so3spline.errors import InvalidArgumentError
from so3spline.rotations.group import Rotation, as_matrices, rotation_angles

DOMAIN_SLACK = 1e-12


def _checked_argument(t: Any) -> np.ndarray:
    arr = np.asarray(t, dtype=float)
    if np.any(np.abs(arr) > 1.0 + DOMAIN_SLACK):
        raise InvalidArgumentError("Chebyshev argument must lie in [-1, 1]")
    return np.clip(arr, -1.0, 1.0)


def chebyshev_u(n: int, t: Any) -> Any:
    """U_n(t) by the three-term recurrence, for t in [-1, 1]."""
    if n < 0:
        raise InvalidArgumentError(f"Chebyshev degree must be non-negative, got {n}")
    x = _checked_argument(t)
    prev = np.ones_like(x)
    if n == 0:
        return prev if prev.ndim else float(prev)
    cur = 2.0 * x
    for _ in range(n - 1):
        prev, cur = cur, 2.0 * x * cur - prev
    return cur if cur.ndim else float(cur)


def chebyshev_u_table(n_max: int, t: Any) -> np.ndarray:
    """Rows U_0(t) .. U_{n_max}(t), shape (n_max + 1,) + t.shape."""
    x = _checked_argument(t)
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = 1.0
    if n_max >= 1:
        out[1] = 2.0 * x
    for k in range(2, n_max + 1):
        out[k] = 2.0 * x * out[k - 1] - out[k - 2]
    return out


def character_from_angle(ell: int, omega: Any) -> Any:
    """c_l(omega) = U_{2l}(cos(omega/2)) = sin((2l+1) omega/2) / sin(omega/2)."""
    return chebyshev_u(2 * ell, np.cos(np.asarray(omega, dtype=float) / 2.0))


def character(ell: int, x: Any) -> Any:
    """Character of the degree-l representation at a rotation (or stack of rotations)."""
    if ell < 0:
        raise InvalidArgumentError(f"Degree must be non-negative, got {ell}")
    omega = rotation_angles(as_matrices(x))
    values = character_from_angle(ell, omega)
    single = isinstance(x, Rotation) or np.shape(x) == (3, 3)
    return float(values[0]) if single else values
