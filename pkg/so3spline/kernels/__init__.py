"""Surface-spline kernels on SO(3) and their spectral data."""

from __future__ import annotations

from so3spline.kernels.surface_spline import (
    DEFAULT_SERIES_TRUNCATION,
    ChebSeries,
    KernelOrder,
    apply_lm,
    cheb_coeff_by_differences,
    cheb_coeff_oracle,
    cpd_data,
    difference_closed_form,
    difference_sum,
    greens_reproduction,
    kernel_cheb_coeff,
    kernel_eval,
    kernel_matrix,
    kernel_series_eval,
    kernel_values,
    lm_symbol,
)

__all__ = [
    "ChebSeries",
    "DEFAULT_SERIES_TRUNCATION",
    "KernelOrder",
    "apply_lm",
    "cheb_coeff_by_differences",
    "cheb_coeff_oracle",
    "cpd_data",
    "difference_closed_form",
    "difference_sum",
    "greens_reproduction",
    "kernel_cheb_coeff",
    "kernel_eval",
    "kernel_matrix",
    "kernel_series_eval",
    "kernel_values",
    "lm_symbol",
]
