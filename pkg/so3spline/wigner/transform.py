"""Fourier coefficients on SO(3): analysis by quadrature and synthesis.

f = sum_l sqrt(2l+1) sum_{k,m} fhat^l_{k,m} D^l_{k,m}, so that ||f||_2^2 = sum |fhat|^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np
from loguru import logger

from so3spline.errors import InvalidArgumentError
from so3spline.rotations.group import Rotation, as_euler_array, geodesic
from so3spline.rotations.quadrature import QuadratureRule
from so3spline.wigner.dfunctions import (
    DEFAULT_DEGREE_CAP,
    basis_size,
    block_offset,
    check_degree,
    wigner_basis_from_euler,
    wigner_indices,
)

# Node chunks are sized so that one complex evaluation block stays near 64 MB.
_BLOCK_ENTRIES = 1 << 22


def band_scale(max_degree: int) -> np.ndarray:
    """sqrt(2l+1) for every (l, k, m) row."""
    ell = wigner_indices(max_degree)[:, 0]
    return np.sqrt(2.0 * ell + 1.0)


@dataclass(frozen=True, eq=False)
class FourierCoefficients:
    """Coefficients fhat^l_{k,m}, l <= band_limit, flattened in (l, k, m) order."""

    band_limit: int
    values: np.ndarray = field(repr=False)
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=complex)
        if v.shape != (basis_size(self.band_limit),):
            raise InvalidArgumentError(
                f"Expected {basis_size(self.band_limit)} coefficients for band {self.band_limit}, "
                f"got shape {v.shape}"
            )
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, band_limit: int) -> "FourierCoefficients":
        return cls(band_limit, np.zeros(basis_size(band_limit), dtype=complex))

    @classmethod
    def from_blocks(cls, blocks: Sequence[np.ndarray]) -> "FourierCoefficients":
        flat = [np.asarray(b, dtype=complex).ravel() for b in blocks]
        return cls(len(blocks) - 1, np.concatenate(flat) if flat else np.zeros(0, dtype=complex))

    @classmethod
    def character(cls, ell: int) -> "FourierCoefficients":
        """Coefficients of the character c_l = trace D^l."""
        blocks = [np.zeros((2 * j + 1, 2 * j + 1), dtype=complex) for j in range(ell + 1)]
        blocks[ell] = np.eye(2 * ell + 1) / math.sqrt(2 * ell + 1)
        return cls.from_blocks(blocks)

    @classmethod
    def random(cls, band_limit: int, seed: int = 0, real: bool = True) -> "FourierCoefficients":
        """Gaussian coefficients; ``real`` symmetrizes so that the function is real-valued."""
        rng = np.random.default_rng(seed)
        p = basis_size(band_limit)
        coeffs = cls(band_limit, rng.standard_normal(p) + 1j * rng.standard_normal(p))
        return coeffs.real_part() if real else coeffs

    def block(self, ell: int) -> np.ndarray:
        if not 0 <= ell <= self.band_limit:
            raise InvalidArgumentError(f"Degree {ell} outside band limit {self.band_limit}")
        start = block_offset(ell)
        size = 2 * ell + 1
        return self.values[start : start + size * size].reshape(size, size)

    def value(self, ell: int, k: int, m: int) -> complex:
        return complex(self.block(ell)[k + ell, m + ell])

    def norm(self) -> float:
        """L2 norm of the synthesized function."""
        return float(np.linalg.norm(self.values))

    def scale_bands(self, factors: Any) -> "FourierCoefficients":
        """Multiply each degree-l block by factors[l]."""
        f = np.asarray(factors)
        ell = wigner_indices(self.band_limit)[:, 0]
        return FourierCoefficients(self.band_limit, self.values * f[ell])

    def resized(self, band_limit: int) -> "FourierCoefficients":
        """Truncate or zero-pad to another band limit."""
        out = np.zeros(basis_size(band_limit), dtype=complex)
        p = min(out.shape[0], self.values.shape[0])
        out[:p] = self.values[:p]
        return FourierCoefficients(band_limit, out)

    def real_part(self) -> "FourierCoefficients":
        """Coefficients of Re f, using conj D^l_{k,m} = (-1)^(k-m) D^l_{-k,-m}."""
        blocks = []
        for ell in range(self.band_limit + 1):
            b = self.block(ell)
            idx = np.arange(-ell, ell + 1)
            sign = (-1.0) ** (idx[:, None] - idx[None, :])
            blocks.append(0.5 * (b + sign * np.conj(b[::-1, ::-1])))
        return FourierCoefficients.from_blocks(blocks)

    def _aligned(self, other: "FourierCoefficients") -> tuple[np.ndarray, np.ndarray, int]:
        n = max(self.band_limit, other.band_limit)
        return self.resized(n).values, other.resized(n).values, n

    def __add__(self, other: "FourierCoefficients") -> "FourierCoefficients":
        a, b, n = self._aligned(other)
        return FourierCoefficients(n, a + b)

    def __sub__(self, other: "FourierCoefficients") -> "FourierCoefficients":
        a, b, n = self._aligned(other)
        return FourierCoefficients(n, a - b)

    def __mul__(self, scalar: complex) -> "FourierCoefficients":
        return FourierCoefficients(self.band_limit, self.values * scalar)

    __rmul__ = __mul__


def _chunk_rows(total: int, width: int) -> int:
    return max(1, min(total, _BLOCK_ENTRIES // max(width, 1)))


def fourier_analyze(
    f: Callable[[np.ndarray], Any],
    n: int,
    rule: QuadratureRule,
    degree_cap: int = DEFAULT_DEGREE_CAP,
) -> FourierCoefficients:
    """fhat^l_{k,m} = sqrt(2l+1) * sum_q w_q f(x_q) conj(D^l_{k,m}(x_q)) for l <= n.

    Exact for f in Pi_n when the rule integrates every D^l with l <= 2n. A smaller
    rule still returns coefficients, flagged ``underintegrated`` in the metadata.
    """
    check_degree(n, degree_cap)
    underintegrated = rule.degree < 2 * n
    if underintegrated:
        logger.warning(f"Rule of degree {rule.degree} cannot integrate band {n} products exactly")

    values = np.asarray(f(rule.matrices), dtype=complex).reshape(-1)
    if values.shape[0] != len(rule):
        raise InvalidArgumentError("Function returned the wrong number of values")
    weighted = rule.weights * values
    euler = rule.euler
    p = basis_size(n)
    acc = np.zeros(p, dtype=complex)
    step = _chunk_rows(len(rule), p)
    for start in range(0, len(rule), step):
        basis = wigner_basis_from_euler(euler[start : start + step], n)
        acc += basis.conj().T @ weighted[start : start + step]
    logger.debug(f"Analyzed band {n} on {len(rule)} nodes")
    return FourierCoefficients(
        n,
        acc * band_scale(n),
        metadata={"underintegrated": underintegrated, "rule_degree": rule.degree},
    )


def fourier_synthesize(coeffs: FourierCoefficients, x: Any) -> Any:
    """Evaluate sum_l sqrt(2l+1) fhat^l . D^l at a rotation or a stack of rotations."""
    euler = as_euler_array(x)
    n = coeffs.band_limit
    scaled = coeffs.values * band_scale(n)
    out = np.empty(euler.shape[0], dtype=complex)
    step = _chunk_rows(euler.shape[0], scaled.shape[0])
    for start in range(0, euler.shape[0], step):
        out[start : start + step] = wigner_basis_from_euler(euler[start : start + step], n) @ scaled
    single = isinstance(x, Rotation) or np.shape(x) == (3, 3)
    return complex(out[0]) if single else out


def synthesizer(coeffs: FourierCoefficients, real: bool = True) -> Callable[[np.ndarray], np.ndarray]:
    """Test function x -> f(x) for given coefficients (real part by default)."""

    def evaluate(x: np.ndarray) -> np.ndarray:
        values = fourier_synthesize(coeffs, x)
        return np.real(values) if real else values

    return evaluate


def geodesic_excess_energy(
    coeffs: FourierCoefficients,
    x0: Rotation,
    axis: Sequence[float],
    band: int | None = None,
    samples: int | None = None,
) -> float:
    """Fraction of the energy of t -> f(x0 s_axis(t)) at frequencies above ``band``.

    Zero (to roundoff) when f lies in Pi_band: restrictions to geodesics are
    trigonometric polynomials of the same degree.
    """
    band = coeffs.band_limit if band is None else band
    if samples is None:
        samples = 4 * max(coeffs.band_limit, 1) + 8
    t = 2.0 * math.pi * np.arange(samples) / samples
    values = fourier_synthesize(coeffs, geodesic(x0, axis, t))
    spectrum = np.fft.fft(values) / samples
    freqs = np.fft.fftfreq(samples, d=1.0 / samples)
    energy = np.abs(spectrum) ** 2
    total = float(energy.sum())
    if total == 0.0:
        return 0.0
    return float(energy[np.abs(freqs) > band].sum() / total)
