"""Tests for coefficient kernels, error kernels and local approximants."""

from __future__ import annotations

import math

import numpy as np
import pytest

from so3spline.errors import DensityError, InvalidArgumentError
from so3spline.fit import evaluate_model
from so3spline.kernels import KernelOrder
from so3spline.localize import (
    CoefficientKernel,
    ConvergenceTable,
    RadiusRule,
    build_approximant,
    calibrate_radius,
    coefficient_ratio,
    coefficient_vector,
    convergence_study,
    decay_slope,
    error_kernel_eval,
    error_kernel_profile,
    fit_order,
    level_counts,
    local_centers,
    near_field_bound,
    quadrature_refinement_change,
    refine_approximant,
    taylor_replacement_bound,
    verify_ckc,
)
from so3spline.rotations import (
    Rotation,
    ball_volume,
    haar_quadrature,
    haar_random,
    nested_levels,
    pairwise_distances,
    sample_ball,
    sample_points,
)
from so3spline.wigner import FourierCoefficients, wigner_basis


def _random(count: int, seed: int = 0) -> np.ndarray:
    return haar_random(count, np.random.default_rng(seed))


@pytest.fixture(scope="module")
def cloud():
    """300 quasi-uniform centers."""
    return sample_points(300, mode="quasi_uniform", seed=1)


# ---------------------------------------------------------------------------
# Local centers and coefficient kernels
# ---------------------------------------------------------------------------


class TestLocalCenters:
    def test_radius_below_separation(self, cloud):
        alpha = cloud[17]
        idx = local_centers(cloud, alpha, 0.5 * cloud.separation)
        assert idx.tolist() == [17]

    def test_global_radius(self, cloud):
        assert local_centers(cloud, cloud[0], math.pi).size == len(cloud)

    def test_empty_ball(self):
        pts = np.stack([np.eye(3)])
        far = Rotation(np.diag([1.0, -1.0, -1.0]))
        with pytest.raises(DensityError, match="No centers"):
            local_centers(pts, far, 0.1)

    def test_packing_count(self, cloud):
        rho = 0.8
        q = cloud.separation
        count = local_centers(cloud, Rotation(_random(1, seed=3)[0]), rho).size
        assert count <= (math.pi**2 / 4.0) * (1.0 + 2.0 * rho / q) ** 3


class TestCoefficientKernel:
    def test_degree_zero_weights_are_uniform(self):
        alpha = Rotation(_random(1, seed=4)[0])
        pts = sample_ball(alpha, 0.3, 4, seed=2)
        vec = coefficient_vector(pts, alpha, 0, math.pi)
        np.testing.assert_allclose(vec.weights, 0.25, atol=1e-12)
        assert vec.l1_norm == pytest.approx(1.0)

    def test_reproduces_polynomials(self, cloud):
        ck = CoefficientKernel(cloud, 2, 1.8)
        alpha = Rotation(_random(1, seed=5)[0])
        vec = ck.weights(alpha)
        basis = wigner_basis(cloud.subset(vec.indices), 2)
        np.testing.assert_allclose(basis.T @ vec.weights, wigner_basis(alpha, 2)[0], atol=1e-10)
        assert ck.precision_residual(alpha, vec) <= 1e-10

    def test_support_inside_ball(self, cloud):
        ck = CoefficientKernel(cloud, 1, 1.2)
        alpha = Rotation(_random(1, seed=6)[0])
        vec = ck.weights(alpha)
        d = pairwise_distances(alpha.matrix[None], cloud.subset(vec.indices))[0]
        assert np.all(d <= 1.2 + 1e-12)

    def test_target_at_center(self, cloud):
        ck = CoefficientKernel(cloud, 2, 1.8)
        vec = ck.weights(cloud[3])
        assert ck.precision_residual(cloud[3], vec) <= 1e-10

    def test_too_few_local_centers(self, cloud):
        ck = CoefficientKernel(cloud, 4, 0.3)
        with pytest.raises(DensityError, match="Increase the localization radius"):
            ck.weights(Rotation(_random(1, seed=7)[0]))

    def test_dense_vector(self, cloud):
        vec = CoefficientKernel(cloud, 1, 1.2).weights(cloud[0])
        dense = vec.dense(len(cloud))
        assert dense.shape == (300,)
        assert np.sum(dense) == pytest.approx(1.0)

    def test_invalid_arguments(self, cloud):
        with pytest.raises(InvalidArgumentError, match="Precision"):
            CoefficientKernel(cloud, -1, 1.0)
        with pytest.raises(InvalidArgumentError, match="Radius"):
            CoefficientKernel(cloud, 1, 0.0)

    def test_radius_clamped(self, cloud):
        assert CoefficientKernel(cloud, 1, 10.0).radius == math.pi


class TestVerifyCkc:
    def test_feasible_radius(self, cloud):
        report = verify_ckc(CoefficientKernel(cloud, 2, 1.8), probe_count=40, seed=1)
        assert report.feasible
        assert report.max_precision_residual <= 1e-8
        assert report.max_support_violation == 0.0
        assert report.density_failures == 0
        assert report.stability >= 1.0
        assert report.min_local_count >= 35

    def test_small_radius_reports_failures(self, cloud):
        report = verify_ckc(CoefficientKernel(cloud, 4, 0.3), probe_count=20, seed=2)
        assert not report.feasible
        assert report.density_failures > 0

    def test_to_dict(self, cloud):
        data = verify_ckc(CoefficientKernel(cloud, 0, 0.9), probe_count=10).to_dict()
        assert data["feasible"] is True
        assert data["precision"] == 0
        assert data["stability"] == pytest.approx(1.0)


class TestRadiusRule:
    def test_scaling(self):
        rule = RadiusRule(0.5, 2)
        assert rule.radius(0.1) == pytest.approx(0.2)

    def test_clamped_to_pi(self):
        assert RadiusRule(10.0, 3).radius(1.0) == math.pi

    def test_calibration_is_feasible(self, cloud):
        rule = calibrate_radius(cloud, 2, probe_count=30)
        ck = CoefficientKernel(cloud, 2, rule.radius(cloud.fill))
        assert verify_ckc(ck, probe_count=30).feasible

    def test_unreachable_precision(self):
        ps = sample_points(20, mode="uniform", seed=3)
        with pytest.raises(DensityError, match="global support"):
            calibrate_radius(ps, 4, probe_count=5)


# ---------------------------------------------------------------------------
# Error kernel
# ---------------------------------------------------------------------------


class TestErrorKernel:
    def test_vanishes_at_center_target(self, cloud):
        ck = CoefficientKernel(cloud, 0, 0.5 * cloud.separation)
        xs = _random(20, seed=8)
        np.testing.assert_allclose(error_kernel_profile(2, ck, cloud[5], xs), 0.0, atol=1e-14)

    def test_single_evaluation(self, cloud):
        ck = CoefficientKernel(cloud, 2, 1.8)
        alpha = Rotation(_random(1, seed=9)[0])
        x = Rotation(_random(1, seed=10)[0])
        profile = error_kernel_profile(2, ck, alpha, x.matrix[None])
        assert error_kernel_eval(2, ck, x, alpha) == pytest.approx(profile[0])

    def test_bounded_by_stability(self, cloud):
        ck = CoefficientKernel(cloud, 2, 1.8)
        alpha = Rotation(_random(1, seed=11)[0])
        K = ck.weights(alpha).l1_norm
        assert np.all(error_kernel_profile(2, ck, alpha, _random(100, seed=12)) <= 1.0 + K)

    def test_near_field_bound(self, cloud):
        o = KernelOrder(2)
        rho = 1.6
        ck = CoefficientKernel(cloud, 2, rho)
        alpha = Rotation(_random(1, seed=13)[0])
        K = ck.weights(alpha).l1_norm
        xs = sample_ball(alpha, min(2 * rho, math.pi), 200, seed=4)
        assert np.all(error_kernel_profile(o, ck, alpha, xs) <= near_field_bound(o, K, rho))

    def test_taylor_bound_far_field(self, cloud):
        o = KernelOrder(2)
        rho = 1.6
        ck = CoefficientKernel(cloud, 2, rho)
        alpha = Rotation(_random(1, seed=14)[0])
        xs = _random(400, seed=15)
        far = xs[pairwise_distances(alpha.matrix[None], xs)[0] >= 2 * rho * 0.9]
        assert far.shape[0] > 0
        errors = error_kernel_profile(o, ck, alpha, far)
        for x, e in zip(far, errors):
            bound = taylor_replacement_bound(o, ck, Rotation(x), alpha)
            assert e <= bound * (1 + 1e-6) + 1e-12

    def test_far_field_decay(self):
        """Decay beyond the support, on a 600-point cluster inside a ball of radius 0.2.

        At L = 4 a 500-point quasi-uniform set needs rho near 2 to hold 165 centers per
        ball, so annuli from 2 rho outwards would leave SO(3). The dense cluster keeps
        rho small.
        """
        alpha = Rotation(_random(1, seed=16)[0])
        centers = sample_ball(alpha, 0.2, 600, seed=5)
        ck = CoefficientKernel(centers, 4, 0.2)
        fit = decay_slope(2, ck, alpha, seed=3)
        assert fit.slope <= -3.0
        assert np.all(np.diff(fit.scaled_distance) > 0)

    def test_annuli_need_room(self, cloud):
        ck = CoefficientKernel(cloud, 0, 2.0)
        with pytest.raises(InvalidArgumentError, match="reduce rho"):
            decay_slope(2, ck, cloud[0])


# ---------------------------------------------------------------------------
# Approximants and convergence studies
# ---------------------------------------------------------------------------


class TestApproximant:
    def test_zero_function(self, cloud):
        model = build_approximant(FourierCoefficients.zeros(2), cloud, 2, 2, 1.8, haar_quadrature(4))
        assert np.all(model.alpha == 0)
        assert model.info["coefficient_l1"] == 0.0

    def test_coefficient_norm_bound(self, cloud):
        f = FourierCoefficients.character(2)
        model = build_approximant(f, cloud, 2, 2, 1.8, haar_quadrature(8))
        info = model.info
        assert info["coefficient_l1"] <= 1.05 * info["stability"] * info["lm_l1"]
        assert info["nodes"] == len(haar_quadrature(8))
        assert info["radius"] == pytest.approx(1.8)

    def test_workers_do_not_change_result(self, cloud):
        f = FourierCoefficients.random(2, seed=4)
        rule = haar_quadrature(4)
        serial = build_approximant(f, cloud, 2, 2, 1.8, rule, chunk_size=16)
        threaded = build_approximant(f, cloud, 2, 2, 1.8, rule, workers=3, chunk_size=16)
        np.testing.assert_array_equal(serial.alpha, threaded.alpha)

    def test_model_is_evaluable(self, cloud):
        model = build_approximant(FourierCoefficients.character(1), cloud, 2, 2, 1.8, haar_quadrature(4))
        values = evaluate_model(model, _random(5, seed=17))
        assert values.shape == (5,)
        assert np.all(np.isfinite(values))

    def test_refinement_change(self, cloud):
        change = quadrature_refinement_change(
            FourierCoefficients.character(1), cloud, 2, 2, 1.8, haar_quadrature(4)
        )
        assert change >= 0.0

    def test_refine_until_settled(self, cloud):
        f = FourierCoefficients.character(1)
        rule = haar_quadrature(4)
        model, finer, change = refine_approximant(f, cloud, 2, 2, 1.8, rule, tolerance=1.0)
        assert len(finer) >= 2 * len(rule)
        assert change <= 1.0
        assert model.info["nodes"] == len(finer)

    def test_refine_stops_at_limit(self, cloud):
        f = FourierCoefficients.character(1)
        rule = haar_quadrature(2)
        _, finer, change = refine_approximant(
            f, cloud, 2, 2, 1.8, rule, max_refinements=2, tolerance=-1.0
        )
        assert len(finer) >= 4 * len(rule)
        assert change >= 0.0

    def test_refine_disabled(self, cloud):
        rule = haar_quadrature(2)
        model, same, change = refine_approximant(
            FourierCoefficients.character(1), cloud, 2, 2, 1.8, rule, max_refinements=0
        )
        assert same is rule
        assert math.isnan(change)
        assert coefficient_ratio(model) <= 1.0 + 1e-12
        with pytest.raises(InvalidArgumentError, match="max_refinements"):
            refine_approximant(FourierCoefficients.character(1), cloud, 2, 2, 1.8, rule, max_refinements=-1)


class TestConvergence:
    def test_level_counts(self):
        assert level_counts(3, 250, 2.0) == [250, 500, 1000]
        assert level_counts(3, 250, 8.0) == [250, 2000, 16000]

    def test_fit_order(self):
        h = np.array([0.4, 0.2, 0.1])
        assert fit_order(h, h**4) == pytest.approx(4.0)
        assert math.isnan(fit_order([0.1], [1.0]))
        assert math.isnan(fit_order(h, [1.0, math.nan, 0.1]))

    def test_interpolant_study(self):
        levels = nested_levels([30, 90, 270], seed=2, probe_count=2000)
        table = convergence_study(
            2, 4, FourierCoefficients.character(1), levels, rule=haar_quadrature(4),
            method="interpolant", probe_count=50,
        )
        assert isinstance(table, ConvergenceTable)
        assert [r.n_points for r in table.rows] == [30, 90, 270]
        assert all(math.isnan(r.radius) for r in table.rows)
        assert all(math.isnan(r.local_error) for r in table.rows)
        assert math.isnan(table.order_local)
        assert table.metadata["m"] == 2
        assert "quadrature_floor" not in table.metadata

    def test_levels_sorted_coarse_to_fine(self):
        levels = nested_levels([30, 90, 270], seed=2, probe_count=2000)
        table = convergence_study(
            2, 4, FourierCoefficients.character(1), levels[::-1], rule=haar_quadrature(4),
            method="interpolant", probe_count=20,
        )
        assert [r.n_points for r in table.rows] == [30, 90, 270]

    def test_approximant_study_is_deterministic(self):
        levels = nested_levels([100, 200, 400], seed=3, probe_count=1000)
        kwargs = dict(rule=haar_quadrature(4), probe_count=30, radius_rule=RadiusRule(4.0, 1))
        a = convergence_study(2, 1, FourierCoefficients.character(1), levels, **kwargs)
        b = convergence_study(2, 1, FourierCoefficients.character(1), levels, **kwargs)
        assert [r.sup_error for r in a.rows] == [r.sup_error for r in b.rows]
        assert [r.local_error for r in a.rows] == [r.local_error for r in b.rows]
        radii = [r.radius for r in a.rows]
        assert radii[0] > radii[1] > radii[2]

    def test_approximant_rows_carry_diagnostics(self):
        levels = nested_levels([100, 200, 400], seed=3, probe_count=1000)
        table = convergence_study(
            2, 1, FourierCoefficients.character(1), levels, rule=haar_quadrature(4),
            probe_count=30, radius_rule=RadiusRule(4.0, 1),
        )
        for row in table.rows:
            assert row.stability >= 1.0 - 1e-9
            assert 0.0 <= row.coefficient_ratio <= 1.05
            assert 0.0 <= row.refinement_change < math.inf
            assert row.local_error >= 0.0
        floors = table.metadata["quadrature_floor"]
        assert len(floors) == len(table.rows)
        # pointwise triangle inequality through the discretized Green's integral
        for row, floor in zip(table.rows, floors):
            assert row.sup_error <= floor + row.local_error + 1e-12

    def test_refinement_check_can_be_skipped(self):
        levels = nested_levels([100, 200, 400], seed=3, probe_count=1000)
        rule = haar_quadrature(4)
        table = convergence_study(
            2, 1, FourierCoefficients.character(1), levels, rule=rule,
            probe_count=10, radius_rule=RadiusRule(4.0, 1), max_refinements=0,
        )
        assert all(math.isnan(r.refinement_change) for r in table.rows)
        assert all(math.isfinite(r.coefficient_ratio) for r in table.rows)
        assert table.metadata["level_nodes"] == [len(rule)] * 3

    def test_unknown_method(self):
        with pytest.raises(InvalidArgumentError, match="Unknown method"):
            convergence_study(2, 4, FourierCoefficients.character(1), 3, method="global")

    @pytest.mark.parametrize("levels", [0, 1, 2])
    def test_too_few_level_count(self, levels):
        with pytest.raises(InvalidArgumentError, match="At least 3 levels"):
            convergence_study(2, 4, FourierCoefficients.character(1), levels)

    def test_too_few_level_sets(self):
        levels = nested_levels([30, 90], seed=2, probe_count=500)
        with pytest.raises(InvalidArgumentError, match="At least 3 levels"):
            convergence_study(2, 4, FourierCoefficients.character(1), levels, method="interpolant")

    def test_equal_fill_rejected(self):
        ps = nested_levels([40], seed=2, probe_count=400)[0]
        with pytest.raises(InvalidArgumentError, match="strictly decrease"):
            convergence_study(
                2, 4, FourierCoefficients.character(1), [ps, ps, ps], method="interpolant"
            )


# ---------------------------------------------------------------------------
# Full-scale studies
# ---------------------------------------------------------------------------


@pytest.mark.slow
class TestAcceptance:
    def test_stability_bounded_across_levels(self):
        levels = nested_levels([500, 1000, 2000], seed=0)
        rule = calibrate_radius(levels[0], 4)
        stabilities = [
            verify_ckc(CoefficientKernel(ps, 4, rule.radius(ps.fill)), probe_count=100).stability
            for ps in levels
        ]
        assert max(stabilities) <= 4.0 * min(stabilities)

    def test_approximation_order(self):
        """m = 2, L = 4 on three levels that halve h with rho = 5h below pi throughout.

        The sup error against f carries the quadrature error of each level's rule,
        so the localization order is read from the error against that rule's own
        Green's sum.
        """
        levels = nested_levels([500, 4000, 32000], seed=0)
        table = convergence_study(
            2, 4, FourierCoefficients.character(2), levels,
            radius_rule=RadiusRule(5.0 / 16.0, 4), seed=0, workers=4, max_refinements=4,
        )
        rows = table.rows
        fills = [r.fill for r in rows]
        radii = [r.radius for r in rows]

        assert table.localized
        assert all(rho < math.pi for rho in radii)
        assert radii[0] > radii[1] > radii[2]
        for coarse, fine in zip(fills, fills[1:]):
            assert 0.4 <= fine / coarse <= 0.65

        for row in rows:
            assert row.coefficient_ratio <= 1.05
            assert row.refinement_change < 0.01

        assert table.order_local >= 3.5
        errors = [r.sup_error for r in rows]
        assert errors[0] > errors[1] > errors[2]
        assert errors[2] <= table.metadata["quadrature_floor"][2] + rows[2].local_error + 1e-12

    def test_ball_volume_matches_packing(self):
        ps = sample_points(500, mode="quasi_uniform", seed=0)
        rho = 1.0
        counts = [local_centers(ps, ps[i], rho).size for i in range(0, 500, 50)]
        assert np.mean(counts) == pytest.approx(500 * ball_volume(rho), rel=0.3)
