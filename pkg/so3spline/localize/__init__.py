"""Localized approximation: coefficient kernels, error kernels and approximants."""

from __future__ import annotations

from so3spline.localize.approximant import (
    ConvergenceRow,
    ConvergenceTable,
    build_approximant,
    coefficient_ratio,
    convergence_study,
    fit_order,
    level_counts,
    quadrature_refinement_change,
    refine_approximant,
)
from so3spline.localize.coefficients import (
    CkcReport,
    CoefficientKernel,
    CoefficientVector,
    RadiusRule,
    calibrate_radius,
    coefficient_vector,
    local_centers,
    verify_ckc,
)
from so3spline.localize.error_kernel import (
    DecayFit,
    annulus_maxima,
    decay_slope,
    error_kernel_eval,
    error_kernel_profile,
    near_field_bound,
    taylor_replacement_bound,
)

__all__ = [
    "CkcReport",
    "CoefficientKernel",
    "CoefficientVector",
    "ConvergenceRow",
    "ConvergenceTable",
    "DecayFit",
    "RadiusRule",
    "annulus_maxima",
    "build_approximant",
    "calibrate_radius",
    "coefficient_ratio",
    "coefficient_vector",
    "convergence_study",
    "decay_slope",
    "error_kernel_eval",
    "error_kernel_profile",
    "fit_order",
    "level_counts",
    "local_centers",
    "near_field_bound",
    "quadrature_refinement_change",
    "refine_approximant",
    "taylor_replacement_bound",
    "verify_ckc",
]
