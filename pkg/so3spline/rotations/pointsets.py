"""Finite point sets on SO(3): separation, fill distance and samplers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Sequence

import numpy as np
from loguru import logger
from scipy.spatial import cKDTree
from scipy.spatial.transform import Rotation as _ScipyRotation

from so3spline.errors import DegenerateSetError, InvalidArgumentError
from so3spline.rotations.group import (
    Rotation,
    as_matrices,
    as_quaternions,
    haar_random,
    matrices_to_euler,
    matrices_to_quaternions,
    pairwise_distances,
    quaternions_to_matrices,
    rotation_angles,
)

DEFAULT_PROBE_FACTOR = 20
DEFAULT_REFINE_PROBES = 8
DEFAULT_POOL_FACTOR = 8
DEFAULT_MAX_MESH_RATIO = 2.5
DUPLICATE_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class PointSet:
    """Finite set of rotations with its separation distance, fill distance and mesh ratio.

    ``separation`` is the minimal pairwise distance q; ``fill`` is a lower
    estimate of the fill distance from Haar probes; ``mesh_ratio`` = fill / separation.
    """

    matrices: np.ndarray = field(repr=False)
    separation: float = math.nan
    fill: float = math.nan

    def __post_init__(self) -> None:
        m = np.array(self.matrices, dtype=float)
        m.setflags(write=False)
        object.__setattr__(self, "matrices", m)

    @property
    def mesh_ratio(self) -> float:
        if self.separation <= 0:
            return math.inf
        return self.fill / self.separation

    @cached_property
    def quaternions(self) -> np.ndarray:
        return matrices_to_quaternions(self.matrices)

    @cached_property
    def euler(self) -> np.ndarray:
        return matrices_to_euler(self.matrices)

    def __len__(self) -> int:
        return self.matrices.shape[0]

    def __getitem__(self, index: int) -> Rotation:
        return Rotation(self.matrices[index])

    def __iter__(self):
        return (Rotation(m) for m in self.matrices)

    def subset(self, indices: Sequence[int]) -> np.ndarray:
        return self.matrices[np.asarray(indices, dtype=int)]


# ---------------------------------------------------------------------------
# Separation and fill distance
# ---------------------------------------------------------------------------


def _antipodal_tree(q: np.ndarray) -> cKDTree:
    """k-d tree over q and -q; the chordal distance to the nearer sign is 2 sin(d/4)."""
    return cKDTree(np.vstack([q, -q]))


def _chord_to_distance(chord: np.ndarray) -> np.ndarray:
    return 4.0 * np.arcsin(np.minimum(np.asarray(chord) / 2.0, 1.0))


def closest_pair(points: Any) -> tuple[float, int, int]:
    """Minimal pairwise distance of a set and the indices attaining it."""
    q = as_quaternions(points)
    n = q.shape[0]
    if n < 2:
        return math.inf, -1, -1
    chord, idx = _antipodal_tree(q).query(q, k=2)
    # column 0 is the point itself unless a duplicate ties with it
    rows = np.arange(n)
    own_first = idx[:, 0] % n == rows
    other = np.where(own_first, idx[:, 1], idx[:, 0]) % n
    nearest = np.where(own_first, chord[:, 1], chord[:, 0])
    i = int(np.argmin(nearest))
    j = int(other[i])
    best = float(pairwise_distances(q[i : i + 1], q[j : j + 1])[0, 0])
    return best, min(i, j), max(i, j)


def _nearest_distances(probes: np.ndarray, tree: cKDTree) -> np.ndarray:
    chord, _ = tree.query(probes)
    return _chord_to_distance(chord)


def _refine_probes(
    probes: np.ndarray,
    tree: cKDTree,
    rng: np.random.Generator,
    rounds: int = 40,
    proposals: int = 24,
) -> np.ndarray:
    """Hill-climb probe quaternions to increase their distance to the set."""
    best = _nearest_distances(probes, tree)
    step = np.full(probes.shape[0], 0.5)
    current = probes.copy()
    for _ in range(rounds):
        for i in range(current.shape[0]):
            moves = rng.standard_normal((proposals, 3))
            moves *= (step[i] * rng.random(proposals) / np.linalg.norm(moves, axis=1))[:, None]
            deltas = _ScipyRotation.from_rotvec(moves).as_quat()[:, [3, 0, 1, 2]]
            cand = _quat_multiply(current[i][None, :], deltas)
            dist = _nearest_distances(cand, tree)
            k = int(np.argmax(dist))
            if dist[k] > best[i]:
                best[i] = dist[k]
                current[i] = cand[k]
            else:
                step[i] *= 0.6
    return best


def _quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    w1, v1 = a[..., :1], a[..., 1:]
    w2, v2 = b[..., :1], b[..., 1:]
    w = w1 * w2 - np.sum(v1 * v2, axis=-1, keepdims=True)
    v = w1 * v2 + w2 * v1 + np.cross(v1, v2)
    return np.concatenate([w, v], axis=-1)


def estimate_fill_distance(
    points: Any,
    probe_count: int | None = None,
    seed: int = 0,
    refine: int = DEFAULT_REFINE_PROBES,
) -> float:
    """Lower estimate of h = sup_y min_xi d(y, xi) from Haar probes plus hill-climbing."""
    q = as_quaternions(points)
    if probe_count is None:
        probe_count = DEFAULT_PROBE_FACTOR * q.shape[0]
    rng = np.random.default_rng(seed)
    probes = matrices_to_quaternions(haar_random(max(probe_count, 1), rng))
    tree = _antipodal_tree(q)
    nearest = _nearest_distances(probes, tree)
    fill = float(nearest.max())
    if refine > 0:
        worst = np.argsort(nearest)[-refine:]
        fill = max(fill, float(_refine_probes(probes[worst], tree, rng).max()))
    return min(fill, math.pi)


def point_set_stats(
    points: Any,
    probe_count: int | None = None,
    seed: int = 0,
    refine: int = DEFAULT_REFINE_PROBES,
    duplicate_tolerance: float = DUPLICATE_TOLERANCE,
) -> PointSet:
    """Measure separation distance, fill distance and mesh ratio of a point set.

    Raises DegenerateSetError (naming both indices) if two points coincide.
    """
    matrices = as_matrices(points)
    if matrices.shape[0] == 0:
        raise InvalidArgumentError("Point set is empty")
    q = matrices_to_quaternions(matrices)
    if matrices.shape[0] == 1:
        separation = math.pi
    else:
        d_min, i, j = closest_pair(q)
        if d_min <= duplicate_tolerance:
            raise DegenerateSetError(
                f"Points {i} and {j} coincide (distance {d_min:.3e}); separation distance is zero",
                indices=(i, j),
            )
        separation = d_min
    fill = estimate_fill_distance(q, probe_count, seed=seed, refine=refine)
    ps = PointSet(matrices, separation=separation, fill=fill)
    logger.debug(
        f"Point set stats: n={len(ps)}, q={separation:.4g}, h={fill:.4g}, ratio={ps.mesh_ratio:.3g}"
    )
    return ps


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------


def _farthest_point_order(pool: np.ndarray, count: int) -> np.ndarray:
    """Greedy farthest-point insertion order over a pool of quaternions.

    Tracks max |<p, xi>| = cos(d/2) to the chosen set, so the farthest pool
    point is the one with the smallest value.
    """
    chosen = np.empty(count, dtype=int)
    chosen[0] = 0
    closeness = np.abs(pool @ pool[0])
    for k in range(1, count):
        idx = int(np.argmin(closeness))
        chosen[k] = idx
        np.maximum(closeness, np.abs(pool @ pool[idx]), out=closeness)
    return chosen


def farthest_point_subset(points: Any, count: int) -> np.ndarray:
    """Indices of ``count`` points chosen greedily by farthest-point insertion."""
    q = as_quaternions(points)
    if not 1 <= count <= q.shape[0]:
        raise InvalidArgumentError(f"Subset size must lie in [1, {q.shape[0]}], got {count}")
    return _farthest_point_order(q, count)


def _quasi_uniform_order(
    count: int, rng: np.random.Generator, pool_factor: int
) -> np.ndarray:
    pool = matrices_to_quaternions(haar_random(max(pool_factor, 1) * count, rng))
    return pool[_farthest_point_order(pool, count)]


def sample_points(
    count: int,
    mode: str = "quasi_uniform",
    seed: int = 0,
    probe_count: int | None = None,
    pool_factor: int = DEFAULT_POOL_FACTOR,
    max_mesh_ratio: float = DEFAULT_MAX_MESH_RATIO,
    attempts: int = 3,
) -> PointSet:
    """Haar-random ("uniform") or farthest-point ("quasi_uniform") point sets.

    Quasi-uniform sets are re-drawn with a larger candidate pool until the
    measured mesh ratio is at most ``max_mesh_ratio``. Deterministic for a seed.
    """
    if count < 1:
        raise InvalidArgumentError(f"count must be positive, got {count}")
    rng = np.random.default_rng(seed)
    if mode == "uniform":
        return point_set_stats(haar_random(count, rng), probe_count, seed=seed)
    if mode != "quasi_uniform":
        raise InvalidArgumentError(f"Unknown sampling mode: {mode}. Supported: uniform, quasi_uniform")

    factor = pool_factor
    ps = None
    for attempt in range(attempts):
        q = _quasi_uniform_order(count, rng, factor)
        ps = point_set_stats(quaternions_to_matrices(q), probe_count, seed=seed)
        if ps.mesh_ratio <= max_mesh_ratio:
            return ps
        logger.debug(f"Mesh ratio {ps.mesh_ratio:.3f} above {max_mesh_ratio} (attempt {attempt + 1})")
        factor *= 2
    logger.warning(f"Quasi-uniform sampler missed mesh ratio target: {ps.mesh_ratio:.3f} > {max_mesh_ratio}")
    return ps


def nested_levels(
    counts: Sequence[int],
    seed: int = 0,
    probe_count: int | None = None,
    pool_factor: int = DEFAULT_POOL_FACTOR,
) -> list[PointSet]:
    """Nested quasi-uniform sets: prefixes of one farthest-point ordering."""
    ordered = sorted(int(c) for c in counts)
    if not ordered or ordered[0] < 1:
        raise InvalidArgumentError("Level counts must be positive")
    rng = np.random.default_rng(seed)
    q = _quasi_uniform_order(ordered[-1], rng, pool_factor)
    levels = []
    for c in ordered:
        levels.append(point_set_stats(quaternions_to_matrices(q[:c]), probe_count, seed=seed))
    return levels


def sample_ball(center: Rotation, radius: float, count: int, seed: int = 0) -> np.ndarray:
    """Points in the closed ball B(center, radius) via the exponential map."""
    if not (0 < radius <= math.pi):
        raise InvalidArgumentError(f"radius must lie in (0, pi], got {radius}")
    rng = np.random.default_rng(seed)
    directions = rng.standard_normal((count, 3))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    lengths = radius * rng.random(count) ** (1.0 / 3.0)
    steps = _ScipyRotation.from_rotvec(directions * lengths[:, None]).as_matrix()
    return center.matrix[None, :, :] @ steps


# ---------------------------------------------------------------------------
# Ball volumes
# ---------------------------------------------------------------------------


def ball_volume(radius: float) -> float:
    """Exact Haar measure of a geodesic ball: (rho - sin rho)/pi for rho in [0, pi]."""
    if radius < 0:
        raise InvalidArgumentError(f"radius must be non-negative, got {radius}")
    r = min(radius, math.pi)
    return (r - math.sin(r)) / math.pi


def ball_volume_estimate(
    center: Rotation, radius: float, samples: int = 100_000, seed: int = 0
) -> tuple[float, float]:
    """Monte-Carlo estimate of the ball volume and its standard error."""
    rng = np.random.default_rng(seed)
    x = haar_random(samples, rng)
    inside = rotation_angles(np.swapaxes(x, -1, -2) @ center.matrix) <= radius
    p = float(inside.mean())
    return p, math.sqrt(max(p * (1.0 - p), 0.0) / samples)
