"""Surface-spline fitting: interpolation, Tikhonov regularization and least squares."""

from __future__ import annotations

from so3spline.fit.model import (
    ORDERING_TAG,
    SplineModel,
    evaluate_model,
    model_fourier_coefficients,
)
from so3spline.fit.solvers import (
    SeminormEstimate,
    interpolate,
    least_squares_fit,
    native_seminorm,
    native_seminorm_exact,
    tikhonov_fit,
)
from so3spline.fit.system import SaddleSystem, assemble_system, check_unisolvency, factor_saddle

__all__ = [
    "ORDERING_TAG",
    "SaddleSystem",
    "SeminormEstimate",
    "SplineModel",
    "assemble_system",
    "check_unisolvency",
    "evaluate_model",
    "factor_saddle",
    "interpolate",
    "least_squares_fit",
    "model_fourier_coefficients",
    "native_seminorm",
    "native_seminorm_exact",
    "tikhonov_fit",
]
