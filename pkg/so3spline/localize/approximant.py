"""Local approximants T_Xi f built from coefficient kernels, and convergence studies."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

import numpy as np
from loguru import logger

from so3spline.errors import InvalidArgumentError
from so3spline.fit.model import SplineModel, evaluate_model
from so3spline.fit.solvers import interpolate
from so3spline.kernels.surface_spline import KernelOrder, apply_lm, greens_reproduction
from so3spline.localize.coefficients import (
    DEFAULT_RADIUS_CANDIDATES,
    DEFAULT_RANK_CUTOFF,
    CoefficientKernel,
    RadiusRule,
    calibrate_radius,
)
from so3spline.observability import trace_stage
from so3spline.rotations.group import Rotation, haar_random
from so3spline.rotations.pointsets import PointSet, nested_levels
from so3spline.rotations.quadrature import QuadratureRule, haar_quadrature, refined
from so3spline.wigner.dfunctions import basis_size
from so3spline.wigner.transform import FourierCoefficients, fourier_synthesize

DEFAULT_CHUNK_SIZE = 256
REFINEMENT_TOLERANCE = 0.01
MIN_LEVELS = 3
DEFAULT_GROWTH = 8.0
DEFAULT_MAX_REFINEMENTS = 3


def _as_order(order: KernelOrder | int) -> KernelOrder:
    return order if isinstance(order, KernelOrder) else KernelOrder(order)


def _map_ordered(fn: Callable[[Any], Any], items: Sequence[Any], workers: int) -> list[Any]:
    """Map preserving input order so reductions stay deterministic."""
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def build_approximant(
    f_coeffs: FourierCoefficients,
    points: Any,
    order: KernelOrder | int,
    precision: int,
    radius: float,
    rule: QuadratureRule,
    rank_cutoff: float = DEFAULT_RANK_CUTOFF,
    workers: int = 1,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
) -> SplineModel:
    """T_Xi f = sum_xi A_xi k_m(., xi) with A_xi = sum_q w_q (L_m f)(alpha_q) a(xi, alpha_q).

    Build diagnostics (measured stability, ||L_m f||_1 on the rule, ||A||_1) are
    attached to the model's ``info``.
    """
    o = _as_order(order)
    if precision < 2 * o.m:
        logger.warning(f"Precision L={precision} below 2m={2 * o.m}; rate not covered by theory")
    ck = CoefficientKernel(points, precision, radius, rank_cutoff)
    g = np.asarray(fourier_synthesize(apply_lm(o, f_coeffs), rule.matrices))
    n = ck.n_centers
    chunks = [range(s, min(s + chunk_size, len(rule))) for s in range(0, len(rule), chunk_size)]

    def contribute(nodes: range) -> tuple[np.ndarray, float]:
        local = np.zeros(n, dtype=complex)
        stability = 0.0
        for q in nodes:
            vec = ck.weights(Rotation(rule.matrices[q]))
            stability = max(stability, vec.l1_norm)
            local[vec.indices] += (rule.weights[q] * g[q]) * vec.weights
        return local, stability

    with trace_stage("build_approximant", nodes=len(rule), centers=n, L=precision):
        parts = _map_ordered(contribute, chunks, workers)
    A = np.zeros(n, dtype=complex)
    stability = 0.0
    for local, k in parts:
        A += local
        stability = max(stability, k)
    ck.clear_cache()

    info = {
        "stability": stability,
        "lm_l1": float(np.dot(rule.weights, np.abs(g))),
        "coefficient_l1": float(np.sum(np.abs(A))),
        "radius": ck.radius,
        "precision": precision,
        "nodes": len(rule),
    }
    logger.info(
        f"Built approximant on {n} centers: K={stability:.4g}, ||A||_1={info['coefficient_l1']:.4g}"
    )
    return SplineModel(o, ck.points, A, np.zeros(basis_size(o.cpd_order), dtype=complex), info=info)


def _relative_change(coarse: SplineModel, fine: SplineModel) -> float:
    a0, a1 = coarse.info["coefficient_l1"], fine.info["coefficient_l1"]
    if a0 == a1:
        return 0.0
    return abs(a1 - a0) / max(a1, np.finfo(float).tiny)


def quadrature_refinement_change(
    f_coeffs: FourierCoefficients,
    points: Any,
    order: KernelOrder | int,
    precision: int,
    radius: float,
    rule: QuadratureRule,
    **kwargs: Any,
) -> float:
    """Relative change of ||A||_1 when the rule is replaced by one with twice the nodes."""
    base = build_approximant(f_coeffs, points, order, precision, radius, rule, **kwargs)
    finer = build_approximant(f_coeffs, points, order, precision, radius, refined(rule), **kwargs)
    change = _relative_change(base, finer)
    if change > REFINEMENT_TOLERANCE:
        logger.warning(f"Quadrature refinement changed ||A||_1 by {change:.2%}")
    return change


def refine_approximant(
    f_coeffs: FourierCoefficients,
    points: Any,
    order: KernelOrder | int,
    precision: int,
    radius: float,
    rule: QuadratureRule,
    max_refinements: int = DEFAULT_MAX_REFINEMENTS,
    tolerance: float = REFINEMENT_TOLERANCE,
    **kwargs: Any,
) -> tuple[SplineModel, QuadratureRule, float]:
    """Double the rule until ||A||_1 changes by at most ``tolerance``.

    Returns the approximant on the finest rule used, that rule and the last
    relative change (nan when ``max_refinements`` is 0).
    """
    if max_refinements < 0:
        raise InvalidArgumentError(f"max_refinements must be non-negative, got {max_refinements}")
    model = build_approximant(f_coeffs, points, order, precision, radius, rule, **kwargs)
    change = math.nan
    for _ in range(max_refinements):
        finer_rule = refined(rule)
        finer = build_approximant(f_coeffs, points, order, precision, radius, finer_rule, **kwargs)
        change = _relative_change(model, finer)
        model, rule = finer, finer_rule
        logger.debug(f"Refined to {len(rule)} nodes: ||A||_1 changed by {change:.2%}")
        if change <= tolerance:
            break
    else:
        if max_refinements:
            logger.warning(
                f"||A||_1 still changed by {change:.2%} after {max_refinements} refinements"
            )
    return model, rule, change


def coefficient_ratio(model: SplineModel) -> float:
    """||A||_1 / (K ||L_m f||_1) from the build diagnostics of an approximant."""
    info = model.info
    bound = info["stability"] * info["lm_l1"]
    if bound <= 0:
        return 0.0 if info["coefficient_l1"] == 0 else math.inf
    return info["coefficient_l1"] / bound


# ---------------------------------------------------------------------------
# Convergence studies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConvergenceRow:
    """One level of a study.

    ``local_error`` is measured against the Green's integral discretized on the
    level's rule, so it excludes that rule's own quadrature error.
    """

    n_points: int
    fill: float
    radius: float
    sup_error: float
    l2_error: float
    local_error: float = math.nan
    stability: float = math.nan
    coefficient_ratio: float = math.nan
    refinement_change: float = math.nan


@dataclass(frozen=True)
class ConvergenceTable:
    """Errors per level (coarse to fine) with log-log fitted orders in h."""

    rows: list[ConvergenceRow]
    order_sup: float
    order_l2: float
    order_local: float = math.nan
    method: str = "approximant"
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def localized(self) -> bool:
        """Whether every level used a radius below pi."""
        return all(r.radius < math.pi for r in self.rows)


def fit_order(fill: Sequence[float], errors: Sequence[float]) -> float:
    """Slope of log(error) against log(h) by least squares."""
    h = np.asarray(fill, dtype=float)
    e = np.asarray(errors, dtype=float)
    if h.size < 2 or not np.all(np.isfinite(e)):
        return math.nan
    slope, _ = np.polyfit(np.log(h), np.log(np.maximum(e, np.finfo(float).tiny)), 1)
    return float(slope)


def level_counts(levels: int, base_count: int, growth: float) -> list[int]:
    return [int(round(base_count * growth**k)) for k in range(levels)]


def _ordered_levels(level_sets: list[PointSet]) -> list[PointSet]:
    """Levels sorted coarse to fine; h must strictly decrease."""
    if len(level_sets) < MIN_LEVELS:
        raise InvalidArgumentError(
            f"At least {MIN_LEVELS} levels are required, got {len(level_sets)}"
        )
    ordered = sorted(level_sets, key=lambda ps: ps.fill, reverse=True)
    fills = [ps.fill for ps in ordered]
    if any(not b < a for a, b in zip(fills, fills[1:])):
        raise InvalidArgumentError(
            "Fill distances must strictly decrease across levels, got "
            + ", ".join(f"{h:.4g}" for h in fills)
        )
    return ordered


def convergence_study(
    order: KernelOrder | int,
    precision: int,
    f_coeffs: FourierCoefficients,
    levels: int | Sequence[PointSet],
    rule: QuadratureRule | None = None,
    seed: int = 0,
    method: str = "approximant",
    radius_rule: Optional[RadiusRule] = None,
    radius_candidates: Sequence[float] = DEFAULT_RADIUS_CANDIDATES,
    probe_count: int = 500,
    base_count: int = 250,
    growth: float = DEFAULT_GROWTH,
    quadrature_degree: int = 16,
    workers: int = 1,
    rank_cutoff: float = DEFAULT_RANK_CUTOFF,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    max_refinements: int = DEFAULT_MAX_REFINEMENTS,
) -> ConvergenceTable:
    """Measure sup and L2 errors of T_Xi f (or of the interpolant) on nested levels.

    Needs at least three levels with strictly decreasing fill distance. With
    ``levels`` given as a count, the sets are nested quasi-uniform prefixes of
    ``base_count * growth**k`` points; growth 8 halves h per level. For the
    approximant every level refines ``rule`` until ||A||_1 settles (at most
    ``max_refinements`` doublings) and records the stability K, the ratio
    ||A||_1 / (K ||L_m f||_1) and the last refinement change. Its local error is
    measured against the Green's integral discretized on that level's rule.
    """
    o = _as_order(order)
    if method not in ("approximant", "interpolant"):
        raise InvalidArgumentError(f"Unknown method: {method}. Supported: approximant, interpolant")
    if isinstance(levels, int):
        if levels < MIN_LEVELS:
            raise InvalidArgumentError(f"At least {MIN_LEVELS} levels are required, got {levels}")
        level_sets = nested_levels(level_counts(levels, base_count, growth), seed=seed)
    else:
        level_sets = list(levels)
    level_sets = _ordered_levels(level_sets)
    rule = rule or haar_quadrature(quadrature_degree)

    rng = np.random.default_rng(seed)
    probes = haar_random(probe_count, rng)
    f_probe = np.asarray(fourier_synthesize(f_coeffs, probes))
    f_rule = np.asarray(fourier_synthesize(f_coeffs, rule.matrices))

    metadata: dict[str, Any] = {
        "m": o.m,
        "precision": precision,
        "seed": seed,
        "rule_degree": rule.degree,
        "rule_nodes": len(rule),
    }
    if method == "approximant":
        if radius_rule is None:
            radius_rule = calibrate_radius(
                level_sets[0],
                precision,
                radius_candidates,
                probe_count=min(probe_count, 100),
                seed=seed,
                rank_cutoff=rank_cutoff,
            )
        metadata["radius_constant"] = radius_rule.constant
        metadata["level_nodes"] = []
        metadata["quadrature_floor"] = []

    build_kwargs = dict(rank_cutoff=rank_cutoff, workers=workers, chunk_size=chunk_size)
    rows: list[ConvergenceRow] = []
    with trace_stage("convergence_study", m=o.m, L=precision, levels=len(level_sets), method=method):
        for ps in level_sets:
            local_error = math.nan
            if method == "approximant":
                rho = radius_rule.radius(ps.fill)
                if rho >= math.pi:
                    logger.warning(f"Level n={len(ps)} uses global support (rho = pi)")
                model, level_rule, change = refine_approximant(
                    f_coeffs, ps, o, precision, rho, rule,
                    max_refinements=max_refinements, **build_kwargs,
                )
                diagnostics = dict(
                    stability=model.info["stability"],
                    coefficient_ratio=coefficient_ratio(model),
                    refinement_change=change,
                )
            else:
                rho = math.nan
                model = interpolate(ps, fourier_synthesize(f_coeffs, ps.matrices), o)
                diagnostics = {}
            values = evaluate_model(model, probes)
            sup_error = float(np.max(np.abs(values - f_probe)))
            residual = np.abs(evaluate_model(model, rule.matrices) - f_rule) ** 2
            l2_error = float(math.sqrt(np.dot(rule.weights, residual)))
            if method == "approximant":
                discrete = np.asarray(
                    greens_reproduction(o, f_coeffs, probes, rule=level_rule, method="direct")
                )
                local_error = float(np.max(np.abs(values - discrete)))
                metadata["level_nodes"].append(len(level_rule))
                metadata["quadrature_floor"].append(float(np.max(np.abs(discrete - f_probe))))
            rows.append(
                ConvergenceRow(len(ps), ps.fill, rho, sup_error, l2_error, local_error, **diagnostics)
            )
            logger.info(
                f"Level n={len(ps)} h={ps.fill:.4g} rho={rho:.4g}: "
                f"sup={sup_error:.3e}, L2={l2_error:.3e}, local={local_error:.3e}"
            )

    fills = [r.fill for r in rows]
    return ConvergenceTable(
        rows=rows,
        order_sup=fit_order(fills, [r.sup_error for r in rows]),
        order_l2=fit_order(fills, [r.l2_error for r in rows]),
        order_local=fit_order(fills, [r.local_error for r in rows]),
        method=method,
        metadata=metadata,
    )
