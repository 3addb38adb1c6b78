"""Wigner D-functions in the z-x-z Euler convention.

D^l_{k,m}(x) = exp(-i k phi1) * P^l_{k,m}(cos theta) * exp(-i m phi2), where
P^l_{k,m}(cos theta) = i^(k-m) d^l_{k,m}(theta) and d^l is the real Wigner
small-d matrix (Condon-Shortley phase). With this phase D^l is a unitary
representation: D^l(xy) = D^l(x) D^l(y).

Indices run k, m = -l..l; matrix row i corresponds to k = i - l, column j to m = j - l.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Any

import numpy as np
from scipy.special import binom, eval_jacobi

from so3spline.errors import InvalidArgumentError, UnsupportedDegreeError
from so3spline.rotations.group import Rotation, as_euler_array

DEFAULT_DEGREE_CAP = 32


def basis_size(max_degree: int) -> int:
    """dim Pi_L = sum_{l<=L} (2l+1)^2 = (L+1)(2L+1)(2L+3)/3."""
    if max_degree < 0:
        return 0
    L = max_degree
    return (L + 1) * (2 * L + 1) * (2 * L + 3) // 3


def block_offset(ell: int) -> int:
    """Position of the first (l, -l, -l) entry in the flat (l, k, m) ordering."""
    return basis_size(ell - 1)


@lru_cache(maxsize=None)
def wigner_indices(max_degree: int) -> np.ndarray:
    """Rows (l, k, m) in ascending l, then k, then m; shape (basis_size(L), 3)."""
    rows = [
        (ell, k, m)
        for ell in range(max_degree + 1)
        for k in range(-ell, ell + 1)
        for m in range(-ell, ell + 1)
    ]
    out = np.array(rows, dtype=int).reshape(-1, 3)
    out.setflags(write=False)
    return out


def laplace_eigenvalue(ell: int) -> int:
    """Eigenvalue l(l+1) of the Laplace-Beltrami operator on Harm_l."""
    return ell * (ell + 1)


def check_degree(ell: int, degree_cap: int = DEFAULT_DEGREE_CAP) -> None:
    if ell < 0:
        raise InvalidArgumentError(f"Degree must be non-negative, got {ell}")
    if ell > degree_cap:
        raise UnsupportedDegreeError(ell, degree_cap)


# ---------------------------------------------------------------------------
# Small-d matrices
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _small_d_plan(ell: int) -> tuple[np.ndarray, ...]:
    """Per-entry Jacobi parameters (n, a, b), real prefactor and i^(k-m) phase."""
    size = (2 * ell + 1) ** 2
    n = np.empty(size, dtype=np.int64)
    a = np.empty(size, dtype=np.int64)
    b = np.empty(size, dtype=np.int64)
    pref = np.empty(size)
    phase = np.empty(size, dtype=complex)
    pos = 0
    for k in range(-ell, ell + 1):
        for m in range(-ell, ell + 1):
            # (k_min, a, lambda) for the four cases; the first minimum wins.
            cases = (
                (ell + m, k - m, k - m),
                (ell - m, m - k, 0),
                (ell + k, m - k, 0),
                (ell - k, k - m, k - m),
            )
            kk, aa, lam = min(cases, key=lambda c: c[0])
            bb = 2 * ell - 2 * kk - aa
            n[pos], a[pos], b[pos] = kk, aa, bb
            pref[pos] = (-1.0) ** lam * np.sqrt(binom(2 * ell - kk, kk + aa) / binom(kk + bb, bb))
            phase[pos] = 1j ** ((k - m) % 4)
            pos += 1
    for arr in (n, a, b, pref, phase):
        arr.setflags(write=False)
    return n, a, b, pref, phase


def small_d(ell: int, beta: Any) -> np.ndarray:
    """Real small-d matrices d^l(beta), shape (N, 2l+1, 2l+1) (or (2l+1, 2l+1) for a scalar)."""
    if ell < 0:
        raise InvalidArgumentError(f"Degree must be non-negative, got {ell}")
    b_arr = np.asarray(beta, dtype=float)
    flat = np.atleast_1d(b_arr)
    n, a, b, pref, _ = _small_d_plan(ell)
    half = flat[:, None] / 2.0
    values = (
        pref[None, :]
        * np.sin(half) ** a[None, :]
        * np.cos(half) ** b[None, :]
        * eval_jacobi(n[None, :], a[None, :], b[None, :], np.cos(flat)[:, None])
    )
    out = values.reshape(flat.shape[0], 2 * ell + 1, 2 * ell + 1)
    return out[0] if b_arr.ndim == 0 else out


# ---------------------------------------------------------------------------
# D-functions
# ---------------------------------------------------------------------------


def _d_blocks_from_euler(ell: int, euler: np.ndarray, d_cache: dict | None = None) -> np.ndarray:
    """D^l at each Euler triple, flattened per node: shape (N, (2l+1)^2)."""
    theta_unique, inverse = np.unique(euler[:, 1], return_inverse=True)
    _, _, _, _, phase = _small_d_plan(ell)
    d = small_d(ell, theta_unique).reshape(theta_unique.shape[0], -1)[inverse]
    ks = np.arange(-ell, ell + 1)
    left = np.exp(-1j * np.outer(euler[:, 0], ks))
    right = np.exp(-1j * np.outer(euler[:, 2], ks))
    outer = (left[:, :, None] * right[:, None, :]).reshape(euler.shape[0], -1)
    return outer * (phase[None, :] * d)


def wigner_d_matrix(ell: int, x: Any, degree_cap: int = DEFAULT_DEGREE_CAP) -> np.ndarray:
    """The (2l+1)x(2l+1) unitary matrix D^l(x); a stack for a stack of rotations."""
    check_degree(ell, degree_cap)
    euler = as_euler_array(x)
    blocks = _d_blocks_from_euler(ell, euler).reshape(-1, 2 * ell + 1, 2 * ell + 1)
    single = isinstance(x, Rotation) or np.shape(x) == (3, 3)
    return blocks[0] if single else blocks


def wigner_d(ell: int, k: int, m: int, x: Any, degree_cap: int = DEFAULT_DEGREE_CAP) -> Any:
    """Single entry D^l_{k,m}(x)."""
    if abs(k) > ell or abs(m) > ell:
        raise InvalidArgumentError(f"Indices (k={k}, m={m}) out of range for degree {ell}")
    mat = wigner_d_matrix(ell, x, degree_cap)
    return mat[..., k + ell, m + ell]


def wigner_basis_from_euler(euler: np.ndarray, max_degree: int) -> np.ndarray:
    """Evaluation matrix of all D^l_{k,m}, l <= L, shape (N, basis_size(L))."""
    out = np.empty((euler.shape[0], basis_size(max_degree)), dtype=complex)
    for ell in range(max_degree + 1):
        start = block_offset(ell)
        out[:, start : start + (2 * ell + 1) ** 2] = _d_blocks_from_euler(ell, euler)
    return out


def wigner_basis(points: Any, max_degree: int, degree_cap: int = DEFAULT_DEGREE_CAP) -> np.ndarray:
    """Evaluation matrix of all D^l_{k,m} with l <= max_degree at the given points."""
    check_degree(max_degree, degree_cap)
    return wigner_basis_from_euler(as_euler_array(points), max_degree)
