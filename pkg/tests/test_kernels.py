"""Tests for surface-spline kernels and their spectral data."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.linalg import null_space

from so3spline.errors import InvalidArgumentError
from so3spline.fit import assemble_system
from so3spline.kernels import (
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
from so3spline.rotations import (
    EulerAngles,
    Rotation,
    distance,
    euler_distance,
    from_axis_angle,
    haar_quadrature,
    haar_random,
)
from so3spline.rotations.group import matrices_to_euler
from so3spline.wigner import FourierCoefficients, fourier_synthesize, wigner_d


def _random(count: int, seed: int = 0) -> np.ndarray:
    return haar_random(count, np.random.default_rng(seed))


class TestKernelOrder:
    def test_derived_quantities(self):
        o = KernelOrder(3)
        assert o.exponent == 3
        assert o.cpd_order == 1
        assert o.sign == 1
        assert o.s == pytest.approx(1.5)

    @pytest.mark.parametrize("m", [1, 0, 2.5, True])
    def test_invalid(self, m):
        with pytest.raises(InvalidArgumentError, match="integer >= 2"):
            KernelOrder(m)

    def test_cpd_data(self):
        assert cpd_data(2) == (0, -1)
        assert cpd_data(3) == (1, 1)
        assert cpd_data(4) == (2, -1)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


class TestKernelEvaluation:
    def test_values_by_distance(self):
        assert kernel_values(2, 0.0) == 0.0
        assert kernel_values(2, math.pi) == pytest.approx(1.0)
        assert kernel_values(2, math.pi / 2) == pytest.approx(math.sqrt(2.0) / 2.0)
        assert kernel_values(3, math.pi / 2) == pytest.approx((math.sqrt(2.0) / 2.0) ** 3)

    def test_eval_single(self):
        x = from_axis_angle((0.0, 0.0, 1.0), math.pi / 2)
        assert kernel_eval(2, x, Rotation.identity()) == pytest.approx(math.sin(math.pi / 4))

    def test_matrix_matches_euler_closed_form(self):
        x = _random(10, seed=1)
        y = _random(10, seed=2)
        km = kernel_matrix(2, x, y)
        ex, ey = matrices_to_euler(x), matrices_to_euler(y)
        for i in range(10):
            for j in range(10):
                d = euler_distance(EulerAngles(*ex[i]), EulerAngles(*ey[j]))
                assert km[i, j] == pytest.approx(kernel_values(2, d), abs=1e-10)

    def test_matrix_symmetric(self):
        x = _random(15, seed=3)
        km = kernel_matrix(3, x, x)
        np.testing.assert_allclose(km, km.T, atol=1e-14)
        np.testing.assert_allclose(np.diag(km), 0.0, atol=1e-12)


# ---------------------------------------------------------------------------
# Chebyshev coefficients
# ---------------------------------------------------------------------------


class TestChebyshevCoefficients:
    def test_known_values(self):
        assert kernel_cheb_coeff(2, 0) == pytest.approx(8.0 / (3.0 * math.pi), rel=1e-14)
        assert kernel_cheb_coeff(2, 1) == pytest.approx(-8.0 / (15.0 * math.pi), rel=1e-14)

    @pytest.mark.parametrize("m", [2, 3, 4])
    def test_against_quadrature_oracle(self, m):
        for ell in range(21):
            assert kernel_cheb_coeff(m, ell) == pytest.approx(cheb_coeff_oracle(m, ell), rel=1e-9, abs=1e-14)

    @pytest.mark.parametrize("m", [2, 3])
    def test_against_class_rule(self, m):
        for ell in range(6):
            value = cheb_coeff_oracle(m, ell, method="class")
            assert value == pytest.approx(kernel_cheb_coeff(m, ell), abs=1e-7)

    def test_unknown_oracle_method(self):
        with pytest.raises(InvalidArgumentError, match="Unknown method"):
            cheb_coeff_oracle(2, 1, method="trapezoid")

    @pytest.mark.parametrize("m", [2, 3])
    def test_against_alternating_sum(self, m):
        for ell in range(11):
            assert cheb_coeff_by_differences(m, ell) == pytest.approx(kernel_cheb_coeff(m, ell), rel=1e-9)

    def test_sign_pattern_beyond_cpd_order(self):
        for m in (2, 3, 4):
            o = KernelOrder(m)
            ell = np.arange(o.cpd_order + 1, 40)
            assert np.all(o.sign * kernel_cheb_coeff(o, ell) > 0)

    def test_vectorized(self):
        values = kernel_cheb_coeff(2, np.arange(5))
        assert values.shape == (5,)
        assert values[1] == pytest.approx(kernel_cheb_coeff(2, 1))

    def test_negative_degree(self):
        with pytest.raises(InvalidArgumentError, match="non-negative"):
            kernel_cheb_coeff(2, -1)

    def test_difference_identity(self):
        for M in (2, 4, 6):
            for L in (0.5, 1.5, 7.25):
                assert difference_sum(M, L) == pytest.approx(difference_closed_form(M, L), rel=1e-12)


class TestChebSeries:
    @pytest.mark.parametrize("m", [2, 3, 4])
    def test_sign_is_stable(self, m):
        assert ChebSeries.compute(m, 60).sign_is_stable()

    def test_rows_match_coefficients(self):
        series = ChebSeries.compute(2, 3)
        assert series.max_degree == 3
        assert series.rows()[1] == (1, pytest.approx(-8.0 / (15.0 * math.pi)))

    def test_partial_sum_approaches_kernel(self):
        series = ChebSeries.compute(2, 400)
        assert float(series.evaluate(math.pi / 2)) == pytest.approx(math.sqrt(2.0) / 2.0, abs=1e-4)

    def test_values_read_only(self):
        with pytest.raises(ValueError):
            ChebSeries.compute(2, 2).values[0] = 1.0

    def test_negative_degree(self):
        with pytest.raises(InvalidArgumentError, match="non-negative"):
            ChebSeries.compute(2, -1)


class TestSymbol:
    def test_known_value(self):
        assert lm_symbol(2, 0) == pytest.approx(3.0 * math.pi / 8.0)

    @pytest.mark.parametrize("m", [2, 3, 4, 5])
    def test_inverse_of_coefficients(self, m):
        ell = np.arange(65)
        product = kernel_cheb_coeff(m, ell) * lm_symbol(m, ell)
        np.testing.assert_allclose(product, 2 * ell + 1, rtol=1e-10)

    def test_small_example(self):
        assert kernel_cheb_coeff(2, 1) * lm_symbol(2, 1) == pytest.approx(3.0)

    def test_apply_to_constant(self):
        x = _random(5, seed=4)
        g = apply_lm(2, FourierCoefficients.character(0))
        np.testing.assert_allclose(fourier_synthesize(g, x), 3.0 * math.pi / 8.0, atol=1e-12)

    def test_apply_scales_by_degree(self):
        x = _random(5, seed=5)
        coeffs = FourierCoefficients.character(2)
        expected = lm_symbol(3, 2) * fourier_synthesize(coeffs, x)
        np.testing.assert_allclose(fourier_synthesize(apply_lm(3, coeffs), x), expected, atol=1e-10)


# ---------------------------------------------------------------------------
# Series and Green's function
# ---------------------------------------------------------------------------


class TestSeries:
    def test_quarter_turn(self):
        x = from_axis_angle((0.0, 0.0, 1.0), math.pi / 2)
        value = kernel_series_eval(2, x, Rotation.identity(), truncation=400)
        assert value == pytest.approx(math.sqrt(2.0) / 2.0, abs=1e-4)

    def test_zero_truncation(self):
        x = from_axis_angle((1.0, 0.0, 0.0), 1.0)
        assert kernel_series_eval(2, x, Rotation.identity(), truncation=0) == pytest.approx(8.0 / (3.0 * math.pi))

    def test_random_pairs(self):
        x = _random(50, seed=6)
        y = _random(50, seed=7)
        for a, b in zip(x, y):
            xa, xb = Rotation(a), Rotation(b)
            if distance(xa, xb) < math.pi / 8:
                continue
            exact = kernel_eval(2, xa, xb)
            assert kernel_series_eval(2, xa, xb) == pytest.approx(exact, abs=1e-4)

    def test_error_shrinks_with_truncation(self):
        x = from_axis_angle((0.0, 1.0, 0.0), 2.0)
        exact = kernel_eval(2, x, Rotation.identity())
        errors = [abs(kernel_series_eval(2, x, Rotation.identity(), n) - exact) for n in (25, 100, 400)]
        assert errors[2] < errors[0]


class TestGreensFunction:
    def test_spectral_reproduction(self):
        coeffs = FourierCoefficients.random(3, seed=8)
        x = _random(20, seed=9)
        np.testing.assert_allclose(greens_reproduction(2, coeffs, x), fourier_synthesize(coeffs, x), atol=1e-9)

    def test_spectral_reproduction_higher_order(self):
        coeffs = FourierCoefficients.character(2) + FourierCoefficients.character(0)
        x = _random(10, seed=10)
        np.testing.assert_allclose(greens_reproduction(3, coeffs, x), fourier_synthesize(coeffs, x), atol=1e-9)

    def test_direct_converges(self):
        coeffs = FourierCoefficients.character(1)
        x = _random(10, seed=11)
        f = fourier_synthesize(coeffs, x)
        coarse = greens_reproduction(2, coeffs, x, rule=haar_quadrature(8), method="direct")
        fine = greens_reproduction(2, coeffs, x, rule=haar_quadrature(24), method="direct")
        assert np.max(np.abs(fine - f)) < np.max(np.abs(coarse - f))

    def test_direct_needs_rule(self):
        with pytest.raises(InvalidArgumentError, match="explicit quadrature rule"):
            greens_reproduction(2, FourierCoefficients.character(1), _random(2), method="direct")

    def test_unknown_method(self):
        with pytest.raises(InvalidArgumentError, match="Unknown method"):
            greens_reproduction(2, FourierCoefficients.character(1), _random(2), method="fft")


# ---------------------------------------------------------------------------
# Conditional positive definiteness
# ---------------------------------------------------------------------------


class TestConditionalDefiniteness:
    @pytest.mark.parametrize("m", [2, 3])
    def test_sign_on_moment_free_subspace(self, m):
        o = KernelOrder(m)
        for seed in range(20):
            system = assemble_system(_random(40, seed=100 + seed), o)
            z = null_space(system.B)
            reduced = o.sign * (z.conj().T @ system.A @ z)
            reduced = 0.5 * (reduced + reduced.conj().T)
            assert np.linalg.eigvalsh(reduced).min() > 0

    def test_degree_one_moments(self):
        system = assemble_system(_random(12, seed=1), 3)
        assert system.B.shape == (10, 12)
        np.testing.assert_allclose(system.B[0], 1.0)
        np.testing.assert_allclose(system.B[2], wigner_d(1, -1, 0, _random(12, seed=1)), atol=1e-14)
