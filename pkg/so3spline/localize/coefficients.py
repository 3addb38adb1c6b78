"""Coefficient kernels: local weights reproducing Pi_L at a point.

For a target alpha, a(., alpha) is supported on the centers within distance
rho of alpha and solves sum_xi a(xi, alpha) p(xi) = p(alpha) for all p in Pi_L
with least Euclidean norm.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Any, Sequence

import numpy as np
from loguru import logger
from scipy.linalg import qr, solve_triangular

from so3spline.errors import DensityError, InvalidArgumentError
from so3spline.rotations.group import Rotation, as_quaternions, haar_random, pairwise_distances
from so3spline.rotations.pointsets import PointSet, point_set_stats
from so3spline.wigner.dfunctions import basis_size, wigner_basis

DEFAULT_RANK_CUTOFF = 1e-10
PRECISION_TOLERANCE = 1e-8
DEFAULT_RADIUS_CANDIDATES = (1.0, 2.0, 4.0, 8.0)


@dataclass(frozen=True)
class CoefficientVector:
    """Sparse weights a(xi, alpha) on the center indices ``indices``."""

    indices: np.ndarray
    weights: np.ndarray

    @property
    def l1_norm(self) -> float:
        return float(np.sum(np.abs(self.weights)))

    def dense(self, size: int) -> np.ndarray:
        out = np.zeros(size)
        out[self.indices] = self.weights
        return out


def local_centers(points: Any, alpha: Rotation, radius: float) -> np.ndarray:
    """Indices of centers within ``radius`` of ``alpha`` (ascending)."""
    d = pairwise_distances(alpha.matrix[None, :, :], as_quaternions(points))[0]
    idx = np.flatnonzero(d <= radius)
    if idx.size == 0:
        raise DensityError(f"No centers within radius {radius:.4g} of the target", radius=radius)
    return idx


class CoefficientKernel:
    """Least-norm coefficient kernel a(xi, alpha) for fixed centers, precision L and radius rho."""

    def __init__(
        self,
        points: Any,
        precision: int,
        radius: float,
        rank_cutoff: float = DEFAULT_RANK_CUTOFF,
    ):
        if precision < 0:
            raise InvalidArgumentError(f"Precision L must be non-negative, got {precision}")
        if not (radius > 0):
            raise InvalidArgumentError(f"Radius must be positive, got {radius}")
        self.points = points
        self.precision = int(precision)
        self.radius = float(min(radius, math.pi))
        self.rank_cutoff = rank_cutoff
        self.quaternions = as_quaternions(points)
        self._basis = wigner_basis(points, self.precision)
        self._cache: dict[bytes, CoefficientVector] = {}

    @property
    def n_centers(self) -> int:
        return self.quaternions.shape[0]

    @property
    def n_moments(self) -> int:
        return basis_size(self.precision)

    def moments(self, alpha: Rotation) -> np.ndarray:
        return wigner_basis(alpha, self.precision)[0]

    def weights(self, alpha: Rotation) -> CoefficientVector:
        """a(., alpha); DensityError when the local system cannot reproduce Pi_L."""
        key = alpha.matrix.tobytes()
        cached = self._cache.get(key)
        if cached is not None:
            return cached

        idx = local_centers(self.quaternions, alpha, self.radius)
        p = self.n_moments
        if idx.size < p:
            raise DensityError(
                f"{idx.size} local centers cannot reproduce Pi_{self.precision} ({p} needed)",
                radius=self.radius,
            )
        b_adjoint = self._basis[idx].conj()  # B^* with B[j, i] = D_j(xi_i)
        q, r = qr(b_adjoint, mode="economic")
        diag = np.abs(np.diag(r))
        if diag.min() <= self.rank_cutoff * diag.max():
            raise DensityError(
                f"Local system for Pi_{self.precision} is rank deficient "
                f"({idx.size} centers, ratio {diag.min() / diag.max():.2e})",
                radius=self.radius,
            )
        y = solve_triangular(r.conj().T, self.moments(alpha), lower=True)
        a = q @ y
        imag = float(np.max(np.abs(a.imag))) if a.size else 0.0
        if imag > 1e-8:
            logger.debug(f"Coefficient kernel has imaginary residue {imag:.2e}")
        vec = CoefficientVector(idx, np.ascontiguousarray(a.real))
        self._cache[key] = vec
        return vec

    __call__ = weights

    def clear_cache(self) -> None:
        self._cache.clear()

    def precision_residual(self, alpha: Rotation, vec: CoefficientVector) -> float:
        """max |sum a p(xi) - p(alpha)| over the D-function basis of Pi_L."""
        reproduced = self._basis[vec.indices].T @ vec.weights
        return float(np.max(np.abs(reproduced - self.moments(alpha))))


def coefficient_vector(
    points: Any,
    alpha: Rotation,
    precision: int,
    radius: float,
    rank_cutoff: float = DEFAULT_RANK_CUTOFF,
) -> CoefficientVector:
    """One-off a(., alpha) without keeping a kernel around."""
    return CoefficientKernel(points, precision, radius, rank_cutoff).weights(alpha)


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CkcReport:
    """Measured coefficient-kernel conditions over a probe set."""

    probe_count: int
    precision: int
    radius: float
    stability: float
    max_precision_residual: float
    max_support_violation: float
    min_local_count: int
    max_local_count: int
    mean_local_count: float
    density_failures: int

    @property
    def feasible(self) -> bool:
        return self.density_failures == 0 and self.max_precision_residual <= PRECISION_TOLERANCE

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["feasible"] = self.feasible
        return data


def verify_ckc(ck: CoefficientKernel, probe_count: int = 100, seed: int = 0) -> CkcReport:
    """Check locality, polynomial precision and stability at Haar-random probes.

    Violations are reported, not raised.
    """
    rng = np.random.default_rng(seed)
    probes = haar_random(probe_count, rng)
    stability, residual, violation = 0.0, 0.0, 0.0
    counts: list[int] = []
    failures = 0
    for m in probes:
        alpha = Rotation(m)
        try:
            vec = ck.weights(alpha)
        except DensityError:
            failures += 1
            continue
        counts.append(int(vec.indices.size))
        stability = max(stability, vec.l1_norm)
        residual = max(residual, ck.precision_residual(alpha, vec))
        support = vec.indices[np.abs(vec.weights) > 0]
        if support.size:
            d = pairwise_distances(alpha.matrix[None, :, :], ck.quaternions[support])[0]
            violation = max(violation, float(d.max()) - ck.radius)
    report = CkcReport(
        probe_count=probe_count,
        precision=ck.precision,
        radius=ck.radius,
        stability=stability,
        max_precision_residual=residual,
        max_support_violation=max(violation, 0.0),
        min_local_count=min(counts) if counts else 0,
        max_local_count=max(counts) if counts else 0,
        mean_local_count=float(np.mean(counts)) if counts else 0.0,
        density_failures=failures,
    )
    logger.debug(
        f"CKC check L={ck.precision} rho={ck.radius:.4g}: K={stability:.4g}, "
        f"residual={residual:.2e}, failures={failures}/{probe_count}"
    )
    return report


# ---------------------------------------------------------------------------
# Radius rule
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RadiusRule:
    """rho*(L, h) = c * L^2 * h, clamped to pi."""

    constant: float
    precision: int

    def radius(self, fill: float) -> float:
        return float(min(self.constant * max(self.precision, 1) ** 2 * fill, math.pi))


def calibrate_radius(
    points: Any,
    precision: int,
    candidates: Sequence[float] = DEFAULT_RADIUS_CANDIDATES,
    probe_count: int = 100,
    seed: int = 0,
    rank_cutoff: float = DEFAULT_RANK_CUTOFF,
) -> RadiusRule:
    """Smallest c in candidates / L^2 whose radius makes every probe feasible."""
    ps = points if isinstance(points, PointSet) else point_set_stats(points, seed=seed)
    scale = max(precision, 1) ** 2
    for cand in sorted(candidates):
        rule = RadiusRule(cand / scale, precision)
        rho = rule.radius(ps.fill)
        try:
            report = verify_ckc(CoefficientKernel(ps, precision, rho, rank_cutoff), probe_count, seed)
        except DensityError:
            continue
        if report.feasible:
            logger.info(f"Calibrated radius constant c={rule.constant:.4g} (rho={rho:.4g})")
            return rule
        if rho >= math.pi:
            break
    rule = RadiusRule(math.pi / (scale * ps.fill), precision)
    report = verify_ckc(CoefficientKernel(ps, precision, math.pi, rank_cutoff), probe_count, seed)
    if not report.feasible:
        raise DensityError(
            f"{len(ps)} centers cannot reproduce Pi_{precision} even with global support"
        )
    logger.warning("No candidate radius was feasible; using global support (rho = pi)")
    return rule
