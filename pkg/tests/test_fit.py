"""Tests for saddle systems, interpolation, regularized fitting and least squares."""

from __future__ import annotations

import numpy as np
import pytest

from so3spline.errors import ConditioningError, InvalidArgumentError, UnisolvencyError
from so3spline.fit import (
    SplineModel,
    assemble_system,
    evaluate_model,
    factor_saddle,
    interpolate,
    least_squares_fit,
    model_fourier_coefficients,
    native_seminorm,
    native_seminorm_exact,
    tikhonov_fit,
)
from so3spline.kernels import KernelOrder
from so3spline.rotations import Rotation, haar_quadrature, haar_random, sample_points
from so3spline.wigner import FourierCoefficients, character, fourier_synthesize


def _random(count: int, seed: int = 0) -> np.ndarray:
    return haar_random(count, np.random.default_rng(seed))


def _rule_norm(rule, values: np.ndarray) -> float:
    return float(np.sqrt(np.dot(rule.weights, np.abs(values) ** 2)))


# ---------------------------------------------------------------------------
# Saddle systems
# ---------------------------------------------------------------------------


class TestAssembleSystem:
    def test_single_center(self):
        system = assemble_system(Rotation.identity(), 2)
        np.testing.assert_allclose(system.A, [[0.0]])
        np.testing.assert_allclose(system.B, [[1.0]])
        assert system.n_moments == 1

    def test_saddle_matrix_layout(self):
        system = assemble_system(_random(12, seed=1), 3)
        M = system.matrix(shift=0.5)
        assert M.shape == (22, 22)
        np.testing.assert_allclose(np.diag(M)[:12], 0.5)
        np.testing.assert_allclose(M[12:, 12:], 0.0)

    def test_not_unisolvent(self):
        with pytest.raises(UnisolvencyError, match="Pi_1") as exc:
            assemble_system(_random(3, seed=2), 3)
        assert exc.value.degree == 1

    def test_empty(self):
        with pytest.raises(InvalidArgumentError, match="At least one center"):
            assemble_system(np.zeros((0, 3, 3)), 2)

    def test_condition_limit(self):
        system = assemble_system(_random(20, seed=3), 2)
        with pytest.raises(ConditioningError, match="exceeds the limit"):
            factor_saddle(system, condition_limit=1.0)


# ---------------------------------------------------------------------------
# Interpolation
# ---------------------------------------------------------------------------


class TestInterpolate:
    def test_constant_data(self):
        model = interpolate(_random(30, seed=4), np.full(30, 2.5), 2)
        assert np.max(np.abs(model.alpha)) <= 1e-10
        assert model.beta[0] == pytest.approx(2.5)
        np.testing.assert_allclose(evaluate_model(model, _random(10, seed=5)), 2.5, atol=1e-10)

    def test_single_point(self):
        model = interpolate(Rotation.identity(), [5.0], 2)
        assert model.alpha[0] == pytest.approx(0.0)
        assert model.beta[0] == pytest.approx(5.0)

    def test_reproduces_data(self):
        centers = _random(40, seed=6)
        y = character(2, centers)
        model = interpolate(centers, y, 2)
        residual = np.abs(evaluate_model(model, centers) - y)
        assert residual.max() <= 1e-8 * np.abs(y).max()

    def test_reproduces_moment_polynomials(self):
        centers = _random(60, seed=7)
        p = FourierCoefficients.random(1, seed=3)
        model = interpolate(centers, fourier_synthesize(p, centers), 3)
        probes = _random(1000, seed=8)
        expected = fourier_synthesize(p, probes)
        assert np.max(np.abs(evaluate_model(model, probes) - expected)) <= 1e-7 * np.abs(expected).max()
        assert np.max(np.abs(model.alpha)) <= 1e-8

    def test_moment_conditions(self):
        centers = _random(25, seed=9)
        model = interpolate(centers, character(3, centers), 3)
        system = assemble_system(centers, 3)
        np.testing.assert_allclose(system.B @ model.alpha, 0.0, atol=1e-9)

    def test_refit_is_identity(self):
        centers = sample_points(50, mode="quasi_uniform", seed=10).matrices
        model = interpolate(centers, np.random.default_rng(10).standard_normal(50), 3)
        refit = interpolate(centers, evaluate_model(model, centers), 3)
        scale = np.abs(model.alpha).max()
        np.testing.assert_allclose(refit.alpha, model.alpha, atol=1e-8 * scale)
        np.testing.assert_allclose(refit.beta, model.beta, atol=1e-8 * scale)
        x = _random(100, seed=11)
        np.testing.assert_allclose(evaluate_model(refit, x), evaluate_model(model, x), atol=1e-8 * scale)

    def test_saddle_residual(self):
        centers = sample_points(40, mode="quasi_uniform", seed=12).matrices
        system = assemble_system(centers, 2)
        rhs = np.concatenate([character(1, centers), np.zeros(system.n_moments)]).astype(complex)
        solution = factor_saddle(system).solve(rhs)
        residual = system.matrix() @ solution - rhs
        assert np.linalg.norm(residual) <= 1e-10 * np.linalg.norm(rhs)

    def test_wrong_data_length(self):
        with pytest.raises(InvalidArgumentError, match="Expected 10 data values"):
            interpolate(_random(10, seed=1), np.zeros(9), 2)

    def test_non_finite_data(self):
        with pytest.raises(InvalidArgumentError, match="finite"):
            interpolate(_random(4, seed=1), [0.0, np.nan, 1.0, 2.0], 2)

    def test_records_condition(self):
        model = interpolate(_random(10, seed=2), np.arange(10.0), 2)
        assert model.info["condition"] >= 1.0


# ---------------------------------------------------------------------------
# Tikhonov regularization
# ---------------------------------------------------------------------------


class TestTikhonov:
    def test_small_lambda_matches_interpolant(self):
        centers = _random(40, seed=10)
        y = character(2, centers)
        probes = _random(50, seed=11)
        exact = evaluate_model(interpolate(centers, y, 2), probes)
        smooth = evaluate_model(tikhonov_fit(centers, y, 2, lam=1e-12), probes)
        assert np.max(np.abs(smooth - exact)) <= 1e-6 * np.abs(exact).max()

    def test_polynomial_data_untouched(self):
        model = tikhonov_fit(_random(20, seed=12), np.full(20, -1.0), 2, lam=1.0)
        assert np.max(np.abs(model.alpha)) <= 1e-10
        assert model.beta[0] == pytest.approx(-1.0)

    def test_seminorm_not_larger_than_interpolant(self):
        centers = _random(40, seed=13)
        noise = np.random.default_rng(1).standard_normal(40) * 0.1
        y = character(2, centers) + noise
        interp = native_seminorm_exact(interpolate(centers, y, 2))
        smooth = native_seminorm_exact(tikhonov_fit(centers, y, 2, lam=1e-2))
        assert smooth <= interp + 1e-9

    def test_residual_equals_scaled_coefficients(self):
        centers = _random(30, seed=14)
        y = character(1, centers)
        lam = 0.05
        model = tikhonov_fit(centers, y, 2, lam=lam)
        residual = y - evaluate_model(model, centers)
        np.testing.assert_allclose(residual, KernelOrder(2).sign * lam * model.alpha, atol=1e-9)

    def test_orientations(self):
        centers = _random(20, seed=15)
        y = character(2, centers)
        native = tikhonov_fit(centers, y, 2, lam=0.1, orientation="native")
        literal = tikhonov_fit(centers, y, 2, lam=0.1, orientation="literal")
        assert np.max(np.abs(native.alpha - literal.alpha)) > 1e-6
        # sigma = +1 for odd m: both orientations coincide
        a = tikhonov_fit(centers, y, 3, lam=0.1, orientation="native")
        b = tikhonov_fit(centers, y, 3, lam=0.1, orientation="literal")
        np.testing.assert_allclose(a.alpha, b.alpha, atol=1e-12)

    @pytest.mark.parametrize("lam", [-1.0, 0.0, -0.0, float("nan"), float("inf")])
    def test_non_positive_lambda(self, lam):
        with pytest.raises(InvalidArgumentError, match="must be > 0"):
            tikhonov_fit(_random(5, seed=1), np.zeros(5), 2, lam=lam)

    def test_unknown_orientation(self):
        with pytest.raises(InvalidArgumentError, match="Unknown orientation"):
            tikhonov_fit(_random(5, seed=1), np.zeros(5), 2, lam=1.0, orientation="sideways")


# ---------------------------------------------------------------------------
# Least squares
# ---------------------------------------------------------------------------


class TestLeastSquares:
    def test_reproduces_spline(self):
        centers = _random(20, seed=16)
        target = interpolate(centers, np.random.default_rng(2).standard_normal(20), 2)
        rule = haar_quadrature(10)
        model = least_squares_fit(centers, lambda x: evaluate_model(target, x), 2, rule=rule)
        probes = _random(50, seed=17)
        expected = evaluate_model(target, probes)
        assert np.max(np.abs(evaluate_model(model, probes) - expected)) <= 1e-8 * np.abs(expected).max()

    def test_constant(self):
        rule = haar_quadrature(6)
        model = least_squares_fit(_random(15, seed=18), np.ones(len(rule)), 2, rule=rule)
        np.testing.assert_allclose(evaluate_model(model, _random(10, seed=19)), 1.0, atol=1e-9)

    def test_best_approximation(self):
        centers = _random(25, seed=20)
        rule = haar_quadrature(10)
        f = character(2, rule.matrices)
        projected = least_squares_fit(centers, f, 2, rule=rule)
        interp = interpolate(centers, character(2, centers), 2)
        best = _rule_norm(rule, evaluate_model(projected, rule) - f)
        other = _rule_norm(rule, evaluate_model(interp, rule) - f)
        assert best <= other + 1e-9

    def test_records_gram_condition(self):
        rule = haar_quadrature(6)
        model = least_squares_fit(_random(10, seed=21), np.ones(len(rule)), 2, rule=rule)
        assert model.info["gram_condition"] >= 1.0

    def test_value_count_mismatch(self):
        with pytest.raises(InvalidArgumentError, match="data values"):
            least_squares_fit(_random(10, seed=21), np.ones(3), 2, rule=haar_quadrature(4))


# ---------------------------------------------------------------------------
# Models and seminorms
# ---------------------------------------------------------------------------


class TestSplineModel:
    def test_alpha_length(self):
        with pytest.raises(InvalidArgumentError, match="alpha has 2 entries"):
            SplineModel(KernelOrder(2), _random(3), np.zeros(2), np.zeros(1))

    def test_beta_length(self):
        with pytest.raises(InvalidArgumentError, match="beta must have 10 entries"):
            SplineModel(KernelOrder(3), _random(3), np.zeros(3), np.zeros(1))

    def test_ordering(self):
        with pytest.raises(InvalidArgumentError, match="ordering"):
            SplineModel(KernelOrder(2), _random(1), np.zeros(1), np.zeros(1), ordering="m-k-l")

    def test_linear_combination(self):
        centers = _random(12, seed=22)
        a = interpolate(centers, character(1, centers), 2)
        b = interpolate(centers, character(2, centers), 2)
        x = _random(5, seed=23)
        np.testing.assert_allclose(
            evaluate_model(a + 2.0 * b, x), evaluate_model(a, x) + 2.0 * evaluate_model(b, x), atol=1e-10
        )

    def test_single_rotation_is_scalar(self):
        model = interpolate(_random(6, seed=24), np.arange(6.0), 2)
        assert isinstance(evaluate_model(model, Rotation.identity()), complex)

    def test_polynomial_coefficients(self):
        model = SplineModel(KernelOrder(2), _random(2), np.zeros(2), [4.0])
        coeffs = model_fourier_coefficients(model, 2)
        assert coeffs.value(0, 0, 0) == pytest.approx(4.0)
        assert np.sum(np.abs(coeffs.values[1:])) == pytest.approx(0.0)


class TestSeminorm:
    def test_polynomial_has_zero_seminorm(self):
        model = interpolate(_random(20, seed=25), np.full(20, 3.0), 2)
        assert native_seminorm_exact(model) == pytest.approx(0.0, abs=1e-12)

    def test_homogeneous(self):
        centers = _random(20, seed=26)
        model = interpolate(centers, character(2, centers), 2)
        assert native_seminorm_exact(3.0 * model) == pytest.approx(9.0 * native_seminorm_exact(model), rel=1e-10)

    def test_non_negative(self):
        for m in (2, 3):
            centers = _random(30, seed=27)
            model = interpolate(centers, np.random.default_rng(m).standard_normal(30), m)
            assert native_seminorm_exact(model) > 0

    def test_truncated_plus_tail_matches_exact(self):
        centers = _random(20, seed=28)
        model = interpolate(centers, character(2, centers), 2)
        estimate = native_seminorm(model, band=16)
        exact = native_seminorm_exact(model)
        assert estimate.value <= exact * (1 + 1e-10)
        assert estimate.total == pytest.approx(exact, rel=1e-8)

    def test_quadrature_coefficients_match_exact(self):
        centers = _random(20, seed=28)
        model = interpolate(centers, character(2, centers), 2)
        exact = native_seminorm(model, band=16)
        sampled = native_seminorm(model, band=16, method="quadrature")
        assert sampled.value == pytest.approx(exact.value, rel=1e-2)
        assert sampled.total == pytest.approx(native_seminorm_exact(model), rel=1e-2)

    def test_unknown_method(self):
        model = interpolate(_random(4, seed=1), np.arange(4.0), 2)
        with pytest.raises(InvalidArgumentError, match="Unknown method"):
            native_seminorm(model, method="sampled")

    def test_literal_weighting(self):
        centers = _random(20, seed=29)
        model = interpolate(centers, character(1, centers), 2)
        estimate = native_seminorm(model, band=8, weighting="literal")
        assert estimate.value > 0
        assert estimate.tail >= 0

    def test_unknown_weighting(self):
        model = interpolate(_random(4, seed=1), np.arange(4.0), 2)
        with pytest.raises(InvalidArgumentError, match="Unknown weighting"):
            native_seminorm(model, weighting="other")
