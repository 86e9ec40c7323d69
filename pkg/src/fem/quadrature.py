"""
Gauss quadrature on the reference triangle {xi >= 0, eta >= 0, xi + eta <= 1}.

Low degrees use the classical symmetric rules (centroid, 3-point interior,
7-point Radon). Higher degrees use the collapsed (conical product) rule:
Gauss-Jacobi in xi with weight (1 - xi), Gauss-Legendre in the collapsed
direction. Every rule has positive weights and strictly interior points.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import roots_jacobi

from common.constants import MIN_QUAD_DEGREE, MAX_QUAD_DEGREE
from fem.elements import ElementMap


@dataclass(frozen=True, eq=False)
class QuadRule:
    points: np.ndarray      # (Q, 2) reference coordinates
    weights: np.ndarray     # (Q,), sums to 1/2
    exactness_degree: int

    def __len__(self) -> int:
        return len(self.weights)


def _symmetric(orbits) -> tuple:
    """Expand (a, w) barycentric orbits (a, a, 1-2a) into points and weights."""
    points, weights = [], []
    for a, w in orbits:
        if abs(a - 1.0 / 3.0) < 1e-15:
            points.append((1.0 / 3.0, 1.0 / 3.0))
            weights.append(w)
            continue
        b = 1.0 - 2.0 * a
        for p in ((a, a), (b, a), (a, b)):
            points.append(p)
            weights.append(w)
    return np.array(points), 0.5 * np.array(weights)


def _collapsed(degree: int) -> tuple:
    n = (degree + 2) // 2
    xj, wj = roots_jacobi(n, 1.0, 0.0)      # weight (1 - x) on [-1, 1]
    xl, wl = np.polynomial.legendre.leggauss(n)
    s = 0.5 * (1.0 + xj)
    t = 0.5 * (1.0 + xl)
    xi = np.repeat(s, n)
    eta = np.outer(1.0 - s, t).ravel()
    weights = np.outer(wj, wl).ravel() / 8.0
    return np.column_stack((xi, eta)), weights


@lru_cache(maxsize=None)
def rule_for_degree(d: int) -> QuadRule:
    """Rule exact for all bivariate polynomials of total degree <= d."""
    if not MIN_QUAD_DEGREE <= d <= MAX_QUAD_DEGREE:
        raise ValueError(f"Quadrature degree {d} out of range [{MIN_QUAD_DEGREE}, {MAX_QUAD_DEGREE}].")

    if d <= 1:
        points, weights, exact = np.array([[1.0 / 3.0, 1.0 / 3.0]]), np.array([0.5]), 1
    elif d == 2:
        points, weights = _symmetric([(1.0 / 6.0, 1.0 / 3.0)])
        exact = 2
    elif d <= 5:
        r15 = np.sqrt(15.0)
        points, weights = _symmetric([
            (1.0 / 3.0, 9.0 / 40.0),
            ((6.0 - r15) / 21.0, (155.0 - r15) / 1200.0),
            ((6.0 + r15) / 21.0, (155.0 + r15) / 1200.0),
        ])
        exact = 5
    else:
        points, weights = _collapsed(d)
        exact = 2 * ((d + 2) // 2) - 1

    points.flags.writeable = False
    weights.flags.writeable = False
    return QuadRule(points, weights, exact)


def integrate(rule: QuadRule, emap: ElementMap, integrand: Callable) -> np.ndarray:
    """
    sum_i w_i |det J| integrand(F_K(p_i)) for every element of the map.

    The integrand is called once with x, y arrays of shape (E, Q).
    Returns an (E,) array; index [0] for a single element.
    """
    xq = emap.to_physical(rule.points)
    values = np.asarray(integrand(xq[..., 0], xq[..., 1]), dtype=float)
    values = np.broadcast_to(values, xq.shape[:2])
    return np.abs(emap.det) * (values @ rule.weights)
