"""
Benchmark catalog: coefficient matrices A1-A7, exact solutions with their
hand-derived gradients and Hessians, right-hand sides f = -A:D^2u and
Dirichlet data g = u.

All evaluators are vectorised: they take x, y arrays of any common shape
and return values of that shape, with trailing (2,) for vectors and
(2, 2) for matrices.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from common.constants import SINGULAR_RADIUS
from common.errors import DomainError

logger = logging.getLogger(__name__)

Field = Callable[[np.ndarray, np.ndarray], np.ndarray]

SMOOTHNESS_TAGS = ("holder", "uniform", "discontinuous", "degenerate", "smooth")


def _matrix(a11, a12, a22) -> np.ndarray:
    a11, a12, a22 = np.broadcast_arrays(a11, a12, a22)
    return np.stack((np.stack((a11, a12), axis=-1), np.stack((a12, a22), axis=-1)), axis=-2)


def _radius(x, y) -> np.ndarray:
    return np.hypot(x, y)


def _guard_origin(r: np.ndarray, what: str) -> None:
    if np.any(r < SINGULAR_RADIUS):
        raise DomainError(f"{what} is singular at the origin (r < {SINGULAR_RADIUS:g}).")


def _inv_log(r: np.ndarray, radius_scale: float, name: str) -> np.ndarray:
    """-1/ln(r/scale), extended by its limit 0 at r = 0."""
    rho = r / radius_scale
    if np.any(rho >= 1.0):
        raise DomainError(f"{name} needs r/{radius_scale:g} < 1 so that ln r < 0; got r up to {r.max():.4g}.")
    with np.errstate(divide="ignore"):
        return -1.0 / np.log(rho)


@dataclass(frozen=True)
class CoefficientField:
    name: str
    smoothness: str
    evaluator: Field

    def __call__(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return self.evaluator(x, y)


def coefficient(name: str, radius_scale: float = 1.0) -> CoefficientField:
    """
    Coefficient matrix by name (A1..A7 or identity), r = sqrt(x^2 + y^2).

    The logarithmic matrices A2 and A6 use ln(r / radius_scale) and refuse
    points with r / radius_scale >= 1.
    """
    if name == "A1":
        def ev(x, y):
            s = np.sqrt(_radius(x, y))
            return _matrix(s + 1.0, -s, 5.0 * s + 1.0)
        tag = "holder"
    elif name == "A2":
        def ev(x, y):
            q = _inv_log(_radius(x, y), radius_scale, "A2")
            return _matrix(5.0 * q + 15.0, np.ones_like(q), q + 3.0)
        tag = "uniform"
    elif name == "A3":
        def ev(x, y):
            s = np.sign(x * y)
            return _matrix(np.full_like(s, 2.0), s, np.full_like(s, 2.0))
        tag = "discontinuous"
    elif name == "A4":
        def ev(x, y):
            cx, cy = np.cbrt(np.abs(x)), np.cbrt(np.abs(y))
            return _matrix(cx * cx, -cx * cy, cy * cy)
        tag = "degenerate"
    elif name == "A5":
        def ev(x, y):
            r = _radius(x, y)
            d = 5.0 * np.sqrt(r) + 1.0
            return _matrix(d, 0.5 * r * r, d)
        tag = "holder"
    elif name == "A6":
        def ev(x, y):
            r = _radius(x, y)
            d = 5.0 + _inv_log(r, radius_scale, "A6")
            return _matrix(d, 0.5 * r * r, d)
        tag = "uniform"
    elif name == "A7":
        def ev(x, y):
            r2 = x * x + y * y
            return _matrix(np.full_like(r2, 2.0), r2 * np.sign(x * y), np.full_like(r2, 2.0))
        tag = "discontinuous"
    elif name == "identity":
        def ev(x, y):
            one = np.ones(np.broadcast(x, y).shape)
            return _matrix(one, 0.0 * one, one)
        tag = "smooth"
    else:
        raise ValueError(f"Unknown coefficient {name!r}")
    return CoefficientField(name, tag, ev)


@dataclass(frozen=True)
class ExactSolutionBundle:
    u: Field
    grad_u: Field
    hess_u: Field
    f: Field
    g: Field


@dataclass(frozen=True)
class BenchmarkProblem:
    name: str
    domain_id: str
    coefficient: CoefficientField
    exact: ExactSolutionBundle

    def f(self, x, y) -> np.ndarray:
        return self.exact.f(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def g(self, x, y) -> np.ndarray:
        return self.exact.g(np.asarray(x, dtype=float), np.asarray(y, dtype=float))


def make_problem(
    name: str,
    domain_id: str,
    coeff: CoefficientField,
    u: Field,
    grad_u: Field,
    hess_u: Field,
    f: Optional[Field] = None,
) -> BenchmarkProblem:
    """Bundle an exact solution; f defaults to -A:D^2u evaluated pointwise."""
    if f is None:
        def f(x, y):
            return -np.einsum("...ij,...ij->...", coeff(x, y), hess_u(x, y))
    return BenchmarkProblem(name, domain_id, coeff, ExactSolutionBundle(u, grad_u, hess_u, f, u))


# ------------------------------------------------------------------
# exact solutions
# ------------------------------------------------------------------

def _smooth_wave() -> Tuple[Field, Field, Field]:
    """u = sin(2 pi x) sin(2 pi y) exp(x cos y)."""
    tp = 2.0 * np.pi

    def parts(x, y):
        return (np.sin(tp * x), np.cos(tp * x), np.sin(tp * y), np.cos(tp * y),
                np.cos(y), np.sin(y), np.exp(x * np.cos(y)))

    def u(x, y):
        S, _, T, _, _, _, E = parts(x, y)
        return S * T * E

    def grad_u(x, y):
        S, C, T, D, c, s, E = parts(x, y)
        ux = T * E * (tp * C + S * c)
        uy = S * E * (tp * D - x * s * T)
        return np.stack((ux, uy), axis=-1)

    def hess_u(x, y):
        S, C, T, D, c, s, E = parts(x, y)
        uxx = T * E * (-tp * tp * S + 2.0 * tp * C * c + S * c * c)
        uyy = S * E * (-tp * tp * T - 2.0 * tp * x * s * D + T * (x * x * s * s - x * c))
        uxy = E * ((tp * D - x * s * T) * (tp * C + S * c) - S * T * s)
        return _matrix(uxx, uxy, uyy)

    return u, grad_u, hess_u


def _tent_product() -> Tuple[Field, Field, Field]:
    """u = x y (e^{1-|x|} - 1)(e^{1-|y|} - 1), piecewise smooth across the axes."""
    def g0(t):
        return t * (np.exp(1.0 - np.abs(t)) - 1.0)

    def g1(t):
        return np.exp(1.0 - np.abs(t)) * (1.0 - np.abs(t)) - 1.0

    def g2(t):
        return -np.sign(t) * np.exp(1.0 - np.abs(t)) * (2.0 - np.abs(t))

    def u(x, y):
        return g0(x) * g0(y)

    def grad_u(x, y):
        return np.stack((g1(x) * g0(y), g0(x) * g1(y)), axis=-1)

    def hess_u(x, y):
        return _matrix(g2(x) * g0(y), g1(x) * g1(y), g0(x) * g2(y))

    return u, grad_u, hess_u


def _radial_power(alpha: float) -> Tuple[Field, Field, Field]:
    """u = r^alpha."""
    def u(x, y):
        return _radius(x, y) ** alpha

    def grad_u(x, y):
        r = _radius(x, y)
        with np.errstate(divide="ignore", invalid="ignore"):
            c = np.where(r > 0, alpha * r ** (alpha - 2.0), 0.0)
        return np.stack((c * x, c * y), axis=-1)

    def hess_u(x, y):
        r = _radius(x, y)
        _guard_origin(r, "Hessian of r^alpha")
        c1 = alpha * r ** (alpha - 2.0)
        c2 = alpha * (alpha - 2.0) * r ** (alpha - 4.0)
        return _matrix(c1 + c2 * x * x, c2 * x * y, c1 + c2 * y * y)

    return u, grad_u, hess_u


def _axis_power() -> Tuple[Field, Field, Field]:
    """u = x^{4/3} - y^{4/3} on the first quadrant."""
    def u(x, y):
        return np.abs(x) ** (4.0 / 3.0) - np.abs(y) ** (4.0 / 3.0)

    def grad_u(x, y):
        return np.stack((4.0 / 3.0 * np.cbrt(x), -4.0 / 3.0 * np.cbrt(y)), axis=-1)

    def hess_u(x, y):
        if np.any(np.abs(x) < SINGULAR_RADIUS) or np.any(np.abs(y) < SINGULAR_RADIUS):
            raise DomainError("Hessian of x^{4/3} - y^{4/3} is singular on the axes.")
        cx, cy = np.cbrt(x), np.cbrt(y)
        return _matrix(4.0 / 9.0 / (cx * cx), np.zeros_like(cx * cy), -4.0 / 9.0 / (cy * cy))

    return u, grad_u, hess_u


def _corner_harmonic(beta: float = 2.0 / 3.0) -> Tuple[Field, Field, Field]:
    """u = r^beta sin(beta theta), theta in [0, 2 pi); harmonic, u = Im z^beta."""
    def polar(x, y):
        theta = np.arctan2(y, x)
        return _radius(x, y), np.where(theta < 0.0, theta + 2.0 * np.pi, theta)

    def u(x, y):
        r, th = polar(x, y)
        return r ** beta * np.sin(beta * th)

    def grad_u(x, y):
        r, th = polar(x, y)
        _guard_origin(r, "gradient of r^{2/3} sin(2 theta / 3)")
        c = beta * r ** (beta - 1.0)
        return np.stack((c * np.sin((beta - 1.0) * th), c * np.cos((beta - 1.0) * th)), axis=-1)

    def hess_u(x, y):
        r, th = polar(x, y)
        _guard_origin(r, "Hessian of r^{2/3} sin(2 theta / 3)")
        c = beta * (beta - 1.0) * r ** (beta - 2.0)
        uxx = c * np.sin((beta - 2.0) * th)
        uxy = c * np.cos((beta - 2.0) * th)
        return _matrix(uxx, uxy, -uxx)

    return u, grad_u, hess_u


def _sine_bump() -> Tuple[Field, Field, Field]:
    """u = sin(pi x) sin(pi y)."""
    p = np.pi

    def u(x, y):
        return np.sin(p * x) * np.sin(p * y)

    def grad_u(x, y):
        return np.stack((p * np.cos(p * x) * np.sin(p * y), p * np.sin(p * x) * np.cos(p * y)), axis=-1)

    def hess_u(x, y):
        ss = np.sin(p * x) * np.sin(p * y)
        cc = np.cos(p * x) * np.cos(p * y)
        return _matrix(-p * p * ss, p * p * cc, -p * p * ss)

    return u, grad_u, hess_u


def _zero(x, y):
    return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)


# name -> (domain, coefficient, radius_scale, solution, zero rhs)
_CATALOG: Dict[str, tuple] = {
    "smooth-a1": ("unit-square-centered", "A1", 1.0, _smooth_wave, False),
    "smooth-a2": ("unit-square-centered", "A2", 1.0, _smooth_wave, False),
    "smooth-a3": ("unit-square-centered", "A3", 1.0, _smooth_wave, False),
    "smooth-a4": ("unit-square-centered", "A4", 1.0, _smooth_wave, False),
    "discont-ss13": ("biunit-square", "A3", 1.0, _tent_product, False),
    "singular-r74": ("half-square", "A2", 1.0, lambda: _radial_power(7.0 / 4.0), False),
    "degenerate-x43": ("unit-square", "A4", 1.0, _axis_power, True),
    "lshape-a5": ("L-shape", "A5", 1.0, _corner_harmonic, False),
    "lshape-a6": ("L-shape", "A6", 2.0, _corner_harmonic, False),
    "lshape-a7": ("L-shape", "A7", 1.0, _corner_harmonic, False),
    "sanity-laplace": ("unit-square", "identity", 1.0, _sine_bump, False),
}


def benchmark_names() -> Tuple[str, ...]:
    return tuple(_CATALOG)


def benchmark(name: str) -> BenchmarkProblem:
    try:
        domain_id, coeff_name, scale, solution, zero_rhs = _CATALOG[name]
    except KeyError:
        raise ValueError(f"Unknown benchmark {name!r}, expected one of {benchmark_names()}") from None

    u, grad_u, hess_u = solution()
    coeff = coefficient(coeff_name, radius_scale=scale)
    return make_problem(name, domain_id, coeff, u, grad_u, hess_u, f=_zero if zero_rhs else None)
