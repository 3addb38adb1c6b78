"""Rotation group primitives: representations, conversions and the bi-invariant metric.

Euler angles follow the z-x-z convention x = Rz(phi1) Rx(theta) Rz(phi2) with
phi1, phi2 in [0, 2pi) and theta in [0, pi]. At theta in {0, pi} only the sum
(or difference) of phi1 and phi2 is determined; the canonical choice is phi2 = 0.

Internally quaternions are stored scalar-first, (w, x, y, z), with w >= 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy.spatial.transform import Rotation as _ScipyRotation

from so3spline.errors import InvalidArgumentError, RotationValidationError

TWO_PI = 2.0 * math.pi
ORTHOGONALITY_TOLERANCE = 1e-6
UNIT_TOLERANCE = 1e-9
PAIR_BLOCK = 1 << 21


# ---------------------------------------------------------------------------
# Batched conversions
# ---------------------------------------------------------------------------


def _wrap_angle(phi: np.ndarray) -> np.ndarray:
    wrapped = np.mod(phi, TWO_PI)
    return np.where(wrapped >= TWO_PI, 0.0, wrapped)


def orthonormalize(matrices: np.ndarray) -> np.ndarray:
    """Project (a stack of) nearly orthogonal matrices onto SO(3) via the SVD."""
    m = np.asarray(matrices, dtype=float)
    u, _, vt = np.linalg.svd(m)
    r = u @ vt
    det = np.linalg.det(r)
    if np.any(det <= 0):
        raise RotationValidationError("Matrix has non-positive determinant; not a rotation")
    return r


def euler_matrices(phi1: Any, theta: Any, phi2: Any) -> np.ndarray:
    """Rotation matrices Rz(phi1) Rx(theta) Rz(phi2) for broadcastable angle arrays."""
    a, t, b = np.broadcast_arrays(
        np.asarray(phi1, dtype=float), np.asarray(theta, dtype=float), np.asarray(phi2, dtype=float)
    )
    ca, sa = np.cos(a), np.sin(a)
    ct, st = np.cos(t), np.sin(t)
    cb, sb = np.cos(b), np.sin(b)
    out = np.empty(a.shape + (3, 3))
    out[..., 0, 0] = ca * cb - sa * ct * sb
    out[..., 0, 1] = -ca * sb - sa * ct * cb
    out[..., 0, 2] = sa * st
    out[..., 1, 0] = sa * cb + ca * ct * sb
    out[..., 1, 1] = -sa * sb + ca * ct * cb
    out[..., 1, 2] = -ca * st
    out[..., 2, 0] = st * sb
    out[..., 2, 1] = st * cb
    out[..., 2, 2] = ct
    return out


def matrices_to_euler(matrices: np.ndarray) -> np.ndarray:
    """Canonical z-x-z Euler angles, shape (..., 3), of a stack of rotation matrices.

    The angle sum (theta <= pi/2) or difference (theta > pi/2) is read from the
    upper-left block, phi1 from the third column; this keeps the reconstruction
    error at roundoff level even next to the gimbal points.
    """
    r = np.asarray(matrices, dtype=float)
    r02, r12 = r[..., 0, 2], r[..., 1, 2]
    r20, r21 = r[..., 2, 0], r[..., 2, 1]
    ct = np.clip(r[..., 2, 2], -1.0, 1.0)
    st = 0.5 * (np.hypot(r02, r12) + np.hypot(r20, r21))
    theta = np.arctan2(st, ct)

    total = np.arctan2(r[..., 1, 0] - r[..., 0, 1], r[..., 0, 0] + r[..., 1, 1])
    diff = np.arctan2(r[..., 1, 0] + r[..., 0, 1], r[..., 0, 0] - r[..., 1, 1])
    gimbal = np.hypot(r02, r12) == 0.0
    phi1 = np.where(gimbal, np.where(ct >= 0, total, diff), np.arctan2(r02, -r12))
    phi2 = np.where(gimbal, 0.0, np.where(ct >= 0, total - phi1, phi1 - diff))
    return np.stack([_wrap_angle(phi1), theta, _wrap_angle(phi2)], axis=-1)


def quaternions_to_matrices(quaternions: np.ndarray) -> np.ndarray:
    """Rotation matrices of unit quaternions given scalar-first, shape (..., 4)."""
    q = np.asarray(quaternions, dtype=float)
    flat = q.reshape(-1, 4)
    m = _ScipyRotation.from_quat(flat[:, [1, 2, 3, 0]]).as_matrix()
    return m.reshape(q.shape[:-1] + (3, 3))


def matrices_to_quaternions(matrices: np.ndarray) -> np.ndarray:
    """Scalar-first unit quaternions with non-negative scalar part."""
    m = np.asarray(matrices, dtype=float)
    flat = m.reshape(-1, 3, 3)
    q = _ScipyRotation.from_matrix(flat).as_quat()[:, [3, 0, 1, 2]]
    q = np.where(q[:, :1] < 0, -q, q)
    return q.reshape(m.shape[:-2] + (4,))


def haar_random(count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` Haar-distributed rotation matrices (normalized Gaussian quaternions)."""
    q = rng.standard_normal((count, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    return quaternions_to_matrices(q)


def rotation_angles(matrices: np.ndarray) -> np.ndarray:
    """Rotation angles in [0, pi] of a stack of matrices, accurate near 0 and pi."""
    r = np.asarray(matrices, dtype=float)
    skew = np.stack(
        [r[..., 2, 1] - r[..., 1, 2], r[..., 0, 2] - r[..., 2, 0], r[..., 1, 0] - r[..., 0, 1]],
        axis=-1,
    )
    s = 0.5 * np.linalg.norm(skew, axis=-1)
    c = 0.5 * (np.trace(r, axis1=-2, axis2=-1) - 1.0)
    return np.arctan2(s, c)


def _half_angle_parts(q1: np.ndarray, q2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """|vec(conj(q2) q1)| and |<q1, q2>| for all pairs, shapes (N, M)."""
    w1, v1 = q1[:, None, 0], q1[:, None, 1:]
    w2, v2 = q2[None, :, 0], q2[None, :, 1:]
    vec = w2[..., None] * v1 - w1[..., None] * v2 - np.cross(v2, v1)
    sin_half = np.linalg.norm(vec, axis=-1)
    cos_half = np.abs(q1 @ q2.T)
    return sin_half, cos_half


def pairwise_half_sines(q1: np.ndarray, q2: np.ndarray) -> np.ndarray:
    """sin(d/2) for all pairs of scalar-first quaternions."""
    sin_half, _ = _half_angle_parts(q1, q2)
    return np.minimum(sin_half, 1.0)


def row_block(chunk: int, columns: int) -> int:
    """Rows per block so that one block holds at most PAIR_BLOCK pairs."""
    return max(1, min(chunk, PAIR_BLOCK // max(columns, 1)))


def pairwise_distances(x: Any, y: Any, chunk: int = 4096) -> np.ndarray:
    """Distance matrix d(x_i, y_j), shape (N, M)."""
    qx = as_quaternions(x)
    qy = as_quaternions(y)
    out = np.empty((qx.shape[0], qy.shape[0]))
    chunk = row_block(chunk, qy.shape[0])
    for start in range(0, qx.shape[0], chunk):
        sin_half, cos_half = _half_angle_parts(qx[start : start + chunk], qy)
        out[start : start + chunk] = 2.0 * np.arctan2(sin_half, cos_half)
    return out


# ---------------------------------------------------------------------------
# Single-element representations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EulerAngles:
    phi1: float
    theta: float
    phi2: float

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in (self.phi1, self.theta, self.phi2)):
            raise InvalidArgumentError("Euler angles must be finite")
        if not (0.0 <= self.theta <= math.pi):
            raise InvalidArgumentError(f"theta must lie in [0, pi], got {self.theta}")

    @classmethod
    def reduced(cls, phi1: float, theta: float, phi2: float) -> "EulerAngles":
        """Canonical angles of Rz(phi1) Rx(theta) Rz(phi2) for arbitrary finite reals."""
        if not all(math.isfinite(v) for v in (phi1, theta, phi2)):
            raise InvalidArgumentError("Euler angles must be finite")
        a, t, b = matrices_to_euler(euler_matrices(phi1, theta, phi2))
        return cls(float(a), float(min(t, math.pi)), float(b))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.phi1, self.theta, self.phi2)


@dataclass(frozen=True)
class AxisAngle:
    axis: tuple[float, float, float]
    angle: float


@dataclass(frozen=True, eq=False)
class Rotation:
    """A single element of SO(3), stored as an orthonormal 3x3 matrix."""

    matrix: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=float)
        if m.shape != (3, 3):
            raise RotationValidationError(f"Rotation matrix must be 3x3, got shape {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls) -> "Rotation":
        return cls(np.eye(3))

    @classmethod
    def from_matrix(cls, matrix: Any, tolerance: float = ORTHOGONALITY_TOLERANCE) -> "Rotation":
        """Validate a matrix against R^T R = I, det R = 1 and re-orthonormalize it."""
        m = np.asarray(matrix, dtype=float)
        if m.shape != (3, 3) or not np.all(np.isfinite(m)):
            raise RotationValidationError("Rotation matrix must be a finite 3x3 array")
        err = np.max(np.abs(m.T @ m - np.eye(3)))
        if err > tolerance:
            raise RotationValidationError(f"Matrix is not orthogonal (max deviation {err:.2e})")
        if np.linalg.det(m) <= 0:
            raise RotationValidationError("Matrix has negative determinant (improper rotation)")
        return cls(orthonormalize(m))

    def __matmul__(self, other: "Rotation") -> "Rotation":
        return Rotation(orthonormalize(self.matrix @ other.matrix))

    def inverse(self) -> "Rotation":
        return Rotation(self.matrix.T.copy())

    @property
    def angle(self) -> float:
        return rotation_angle(self)

    def as_quaternion(self) -> np.ndarray:
        return matrices_to_quaternions(self.matrix)

    def as_euler(self) -> EulerAngles:
        return to_euler(self)

    def as_axis_angle(self) -> AxisAngle:
        return to_axis_angle(self)

    def __array__(self, dtype=None, copy=None) -> np.ndarray:
        return np.asarray(self.matrix, dtype=dtype)

    def __repr__(self) -> str:
        e = to_euler(self)
        return f"Rotation(phi1={e.phi1:.6g}, theta={e.theta:.6g}, phi2={e.phi2:.6g})"


def from_euler(angles: EulerAngles | Sequence[float]) -> Rotation:
    """Rotation Rz(phi1) Rx(theta) Rz(phi2); plain triples are validated as EulerAngles."""
    if not isinstance(angles, EulerAngles):
        values = tuple(float(v) for v in angles)
        if len(values) != 3:
            raise InvalidArgumentError(f"Euler angles need three components, got {len(values)}")
        angles = EulerAngles(*values)
    return Rotation(euler_matrices(*angles.as_tuple()))


def to_euler(x: Rotation) -> EulerAngles:
    """Canonical Euler angles; from_euler(to_euler(x)) reproduces x to roundoff."""
    phi1, theta, phi2 = matrices_to_euler(x.matrix)
    return EulerAngles(float(phi1), float(min(theta, math.pi)), float(phi2))


def from_axis_angle(axis: Sequence[float], angle: float) -> Rotation:
    """Rotation by ``angle`` about the unit vector ``axis`` (right-hand rule)."""
    a = np.asarray(axis, dtype=float)
    if a.shape != (3,):
        raise InvalidArgumentError(f"Axis must have three components, got shape {a.shape}")
    norm = float(np.linalg.norm(a))
    if abs(norm - 1.0) > UNIT_TOLERANCE:
        raise InvalidArgumentError(f"Axis must be a unit vector, got norm {norm:.12g}")
    return Rotation(_ScipyRotation.from_rotvec(a / norm * angle).as_matrix())


def to_axis_angle(x: Rotation) -> AxisAngle:
    """Axis and angle in [0, pi]; the axis is (0, 0, 1) for the identity."""
    rotvec = _ScipyRotation.from_matrix(x.matrix).as_rotvec()
    angle = float(np.linalg.norm(rotvec))
    if angle == 0.0:
        return AxisAngle((0.0, 0.0, 1.0), 0.0)
    axis = rotvec / angle
    return AxisAngle((float(axis[0]), float(axis[1]), float(axis[2])), angle)


def rotation_angle(x: Rotation) -> float:
    """omega(x) = arccos((tr x - 1)/2), evaluated without cancellation."""
    return float(rotation_angles(x.matrix))


def distance(x: Rotation, y: Rotation) -> float:
    """Bi-invariant geodesic distance d(x, y) = omega(y^T x), in [0, pi]."""
    return float(rotation_angles(y.matrix.T @ x.matrix))


def euler_distance(a: EulerAngles, b: EulerAngles) -> float:
    """Closed-form distance between two rotations given by Euler angles."""
    dphi1 = a.phi1 - b.phi1
    dphi2 = a.phi2 - b.phi2
    c = math.cos(dphi1 / 2) * math.cos(dphi2 / 2) * math.cos((a.theta - b.theta) / 2) - math.sin(
        dphi1 / 2
    ) * math.sin(dphi2 / 2) * math.cos((a.theta + b.theta) / 2)
    return 2.0 * math.acos(min(1.0, abs(c)))


def geodesic(x0: Rotation, axis: Sequence[float], t: Any) -> np.ndarray:
    """Points x0 s_axis(t) on the geodesic through x0, shape (len(t), 3, 3)."""
    a = np.asarray(axis, dtype=float)
    norm = float(np.linalg.norm(a))
    if abs(norm - 1.0) > UNIT_TOLERANCE:
        raise InvalidArgumentError(f"Axis must be a unit vector, got norm {norm:.12g}")
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    steps = _ScipyRotation.from_rotvec(ts[:, None] * a[None, :]).as_matrix()
    return x0.matrix[None, :, :] @ steps


# ---------------------------------------------------------------------------
# Coercion helpers
# ---------------------------------------------------------------------------


def as_matrices(points: Any) -> np.ndarray:
    """Coerce a Rotation, a point container, a list of Rotations or an array to (N, 3, 3)."""
    if isinstance(points, Rotation):
        return points.matrix[None, :, :]
    matrices = getattr(points, "matrices", None)
    if matrices is not None:
        return matrices
    if isinstance(points, (list, tuple)) and points and isinstance(points[0], Rotation):
        return np.stack([p.matrix for p in points])
    arr = np.asarray(points, dtype=float)
    if arr.shape == (3, 3):
        return arr[None, :, :]
    if arr.ndim != 3 or arr.shape[1:] != (3, 3):
        raise InvalidArgumentError(f"Expected rotation matrices of shape (N, 3, 3), got {arr.shape}")
    return arr


def as_euler_array(points: Any) -> np.ndarray:
    """Euler angles (N, 3), reusing a container's cached angles when present."""
    cached = getattr(points, "euler", None)
    if isinstance(cached, np.ndarray):
        return cached
    return matrices_to_euler(as_matrices(points))


def as_quaternions(points: Any) -> np.ndarray:
    """Quaternions (N, 4), reusing a container's cached quaternions when present."""
    cached = getattr(points, "quaternions", None)
    if isinstance(cached, np.ndarray):
        return cached
    if isinstance(points, np.ndarray) and points.ndim == 2 and points.shape[1] == 4:
        return points
    return matrices_to_quaternions(as_matrices(points))
