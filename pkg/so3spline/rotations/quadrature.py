"""Quadrature rules for the normalized Haar measure on SO(3)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable

import numpy as np
from scipy.special import roots_chebyu, roots_legendre

from so3spline.errors import InvalidArgumentError
from so3spline.rotations.group import (
    TWO_PI,
    as_matrices,
    euler_matrices,
    matrices_to_euler,
    matrices_to_quaternions,
)


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes and weights with sum(weights) = 1.

    ``degree`` is the exactness degree: every D^l with l <= degree integrates
    exactly. Empirical rules built from samples declare degree 0.
    """

    matrices: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    degree: int
    euler_angles: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or w.shape[0] != self.matrices.shape[0]:
            raise InvalidArgumentError("Quadrature weights must match the number of nodes")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_samples(cls, points: Any, weights: Any = None) -> "QuadratureRule":
        """Empirical rule on given nodes; uniform weights by default."""
        m = np.array(as_matrices(points), dtype=float)
        n = m.shape[0]
        if n == 0:
            raise InvalidArgumentError("Quadrature needs at least one node")
        w = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, dtype=float)
        total = float(np.sum(w))
        if total <= 0:
            raise InvalidArgumentError("Quadrature weights must have positive sum")
        return cls(m, w / total, degree=0)

    @cached_property
    def euler(self) -> np.ndarray:
        if self.euler_angles is not None:
            return self.euler_angles
        return matrices_to_euler(self.matrices)

    @cached_property
    def quaternions(self) -> np.ndarray:
        return matrices_to_quaternions(self.matrices)

    def __len__(self) -> int:
        return self.matrices.shape[0]

    def integrate(self, values: Any) -> complex | float:
        """Quadrature sum of values at the nodes (or of a callable on node matrices)."""
        v = values(self.matrices) if callable(values) else np.asarray(values)
        total = np.tensordot(self.weights, v, axes=(0, 0))
        return total.item() if np.ndim(total) == 0 else total


def haar_quadrature(n: int) -> QuadratureRule:
    """Product rule exact for all D^l, l <= n.

    Gauss-Legendre in cos(theta) with floor(n/2)+1 nodes, and n+1 equispaced
    nodes in each of phi1 and phi2, weighted by the Haar density.
    """
    if n < 0:
        raise InvalidArgumentError(f"Quadrature degree must be non-negative, got {n}")
    n_theta = n // 2 + 1
    n_phi = n + 1
    t, w_t = roots_legendre(n_theta)
    theta = np.arccos(np.clip(t, -1.0, 1.0))
    phi = TWO_PI * np.arange(n_phi) / n_phi

    p1, th, p2 = np.meshgrid(phi, theta, phi, indexing="ij")
    _, wt, _ = np.meshgrid(phi, w_t, phi, indexing="ij")
    weights = (wt / (2.0 * n_phi * n_phi)).ravel()
    euler = np.stack([p1.ravel(), th.ravel(), p2.ravel()], axis=1)
    matrices = euler_matrices(euler[:, 0], euler[:, 1], euler[:, 2])
    return QuadratureRule(matrices, weights, degree=n, euler_angles=euler)


def refined(rule: QuadratureRule) -> QuadratureRule:
    """The smallest product rule with at least twice the nodes of ``rule``."""
    degree = max(rule.degree, 1)
    target = 2 * len(rule)
    while len_of_haar_rule(degree) < target:
        degree += 1
    return haar_quadrature(degree)


def len_of_haar_rule(n: int) -> int:
    return (n // 2 + 1) * (n + 1) ** 2


@dataclass(frozen=True)
class ClassQuadrature:
    """Gauss rule for class functions: integral of f(omega) against the angle density."""

    angles: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    degree: int

    def integrate(self, func: Callable[[np.ndarray], np.ndarray]) -> float:
        return float(np.dot(self.weights, func(self.angles)))


def class_quadrature(degree: int) -> ClassQuadrature:
    """Rule exact for polynomials of ``degree`` in cos(omega/2) against (2/pi) sin^2(omega/2).

    With u = cos(omega/2) the class-function integral becomes
    (2/pi) * int_{-1}^{1} f(u) sqrt(1 - u^2) du, a Gauss-Chebyshev (second kind) rule.
    """
    if degree < 0:
        raise InvalidArgumentError(f"degree must be non-negative, got {degree}")
    nodes = degree // 2 + 1
    u, w = roots_chebyu(nodes)
    # Symmetric nodes: fold u -> |u| so angles stay in [0, pi].
    angles = 2.0 * np.arccos(np.abs(u))
    return ClassQuadrature(angles, w * (2.0 / math.pi), degree)
