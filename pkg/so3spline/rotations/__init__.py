"""Rotation group SO(3): elements, metric, point sets and quadrature."""

from __future__ import annotations

from so3spline.rotations.group import (
    AxisAngle,
    EulerAngles,
    Rotation,
    as_matrices,
    distance,
    euler_distance,
    from_axis_angle,
    from_euler,
    geodesic,
    haar_random,
    pairwise_distances,
    rotation_angle,
    rotation_angles,
    to_axis_angle,
    to_euler,
)
from so3spline.rotations.pointsets import (
    PointSet,
    ball_volume,
    ball_volume_estimate,
    closest_pair,
    farthest_point_subset,
    nested_levels,
    point_set_stats,
    sample_ball,
    sample_points,
)
from so3spline.rotations.quadrature import (
    ClassQuadrature,
    QuadratureRule,
    class_quadrature,
    haar_quadrature,
    refined,
)

__all__ = [
    "AxisAngle",
    "ClassQuadrature",
    "EulerAngles",
    "PointSet",
    "QuadratureRule",
    "Rotation",
    "as_matrices",
    "ball_volume",
    "ball_volume_estimate",
    "class_quadrature",
    "closest_pair",
    "farthest_point_subset",
    "distance",
    "euler_distance",
    "from_axis_angle",
    "from_euler",
    "geodesic",
    "haar_quadrature",
    "haar_random",
    "nested_levels",
    "pairwise_distances",
    "point_set_stats",
    "refined",
    "rotation_angle",
    "rotation_angles",
    "sample_ball",
    "sample_points",
    "to_axis_angle",
    "to_euler",
]
