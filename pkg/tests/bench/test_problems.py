"""
Unit tests for problems.py
Tests coefficient matrices, exact-solution derivatives and right-hand sides
"""

import numpy as np
import pytest
from bench.problems import benchmark, benchmark_names, coefficient
from common.errors import DomainError
from fem.mesh import make_initial_mesh

CLI_NAMES = ("smooth-a1", "smooth-a2", "smooth-a3", "smooth-a4", "discont-ss13",
             "singular-r74", "degenerate-x43", "lshape-a5", "lshape-a6", "lshape-a7")


def interior_samples(problem, n=200, seed=0, margin=0.02):
    """Random points inside the problem's domain away from the axes and the origin."""
    mesh = make_initial_mesh(problem.domain_id)
    lo, hi = mesh.vertices.min(axis=0), mesh.vertices.max(axis=0)
    rng = np.random.default_rng(seed)
    pts = lo + (hi - lo) * rng.uniform(margin, 1 - margin, size=(4 * n, 2))
    keep = (np.abs(pts[:, 0]) > margin) & (np.abs(pts[:, 1]) > margin)
    if problem.domain_id == "L-shape":
        keep &= ~((pts[:, 0] > 0) & (pts[:, 1] < 0))
    pts = pts[keep][:n]
    return pts[:, 0], pts[:, 1]


class TestCoefficients:
    """Matrices A1..A7"""

    def test_a1_value(self):
        a = coefficient("A1")(0.3, 0.4)
        s = np.sqrt(0.5)
        assert np.allclose(a, [[s + 1, -s], [-s, 5 * s + 1]])

    def test_a3_first_quadrant(self):
        assert np.allclose(coefficient("A3")(0.2, 0.3), [[2, 1], [1, 2]])

    def test_a3_sign_zero_on_axes(self):
        assert np.allclose(coefficient("A3")(0.0, 0.3), [[2, 0], [0, 2]])

    def test_a4_degenerate_on_axis(self):
        a = coefficient("A4")(0.5, 0.0)
        assert np.allclose(a, [[0.5 ** (2 / 3), 0], [0, 0]])
        assert np.linalg.det(a) == pytest.approx(0.0, abs=1e-15)

    def test_a2_limit_at_origin(self):
        a = coefficient("A2")(0.0, 0.0)
        assert np.allclose(a, [[15, 1], [1, 3]])

    def test_a2_outside_unit_disc(self):
        with pytest.raises(DomainError):
            coefficient("A2")(0.8, 0.8)

    def test_a6_radius_scale(self):
        """A6 on the whole L-shape once ln(r / 2) is used"""
        a = coefficient("A6", radius_scale=2.0)(1.0, 1.0)
        assert np.all(np.isfinite(a))
        with pytest.raises(DomainError):
            coefficient("A6")(1.0, 1.0)

    @pytest.mark.parametrize("name", ["A5", "A6", "A7"])
    def test_equal_diagonal(self, name):
        x, y = np.meshgrid(np.linspace(-0.6, 0.6, 7), np.linspace(-0.6, 0.6, 5))
        a = coefficient(name)(x, y)
        assert np.allclose(a[..., 0, 0], a[..., 1, 1])

    @pytest.mark.parametrize("name", ["A1", "A2", "A3", "A4", "A5", "A6", "A7"])
    def test_symmetric(self, name):
        x, y = np.meshgrid(np.linspace(-0.6, 0.6, 9), np.linspace(-0.6, 0.6, 9))
        a = coefficient(name)(x, y)
        assert a.shape == x.shape + (2, 2)
        assert np.array_equal(a[..., 0, 1], a[..., 1, 0])

    @pytest.mark.parametrize("name", ["A1", "A2", "A3", "A5", "A6", "A7"])
    def test_positive_definite(self, name):
        rng = np.random.default_rng(1)
        x, y = rng.uniform(-0.7, 0.7, size=(2, 500))
        eig = np.linalg.eigvalsh(coefficient(name)(x, y))
        assert eig.min() > 0

    def test_unknown(self):
        with pytest.raises(ValueError):
            coefficient("A8")

    def test_smoothness_tags(self):
        assert coefficient("A1").smoothness == "holder"
        assert coefficient("A3").smoothness == "discontinuous"
        assert coefficient("A4").smoothness == "degenerate"


class TestCatalog:

    def test_cli_vocabulary(self):
        names = benchmark_names()
        for name in CLI_NAMES:
            assert name in names

    def test_unknown(self):
        with pytest.raises(ValueError):
            benchmark("smooth-a9")

    @pytest.mark.parametrize("name", CLI_NAMES + ("sanity-laplace",))
    def test_rhs_consistent(self, name):
        """f + A:D^2u = 0 at interior samples"""
        problem = benchmark(name)
        x, y = interior_samples(problem)
        residual = problem.f(x, y) + np.einsum(
            "...ij,...ij->...", problem.coefficient(x, y), problem.exact.hess_u(x, y))
        assert np.all(np.abs(residual) <= 1e-8 * (1 + np.abs(problem.f(x, y))))

    @pytest.mark.parametrize("name", CLI_NAMES + ("sanity-laplace",))
    def test_gradient_matches_differences(self, name):
        problem = benchmark(name)
        x, y = interior_samples(problem, n=50, seed=2)
        h = 1e-5
        u = problem.exact.u
        fd = np.stack(((u(x + h, y) - u(x - h, y)) / (2 * h),
                       (u(x, y + h) - u(x, y - h)) / (2 * h)), axis=-1)
        grad = problem.exact.grad_u(x, y)
        assert np.allclose(fd, grad, rtol=1e-6, atol=1e-6)

    @pytest.mark.parametrize("name", CLI_NAMES + ("sanity-laplace",))
    def test_hessian_matches_differences(self, name):
        problem = benchmark(name)
        x, y = interior_samples(problem, n=50, seed=3)
        h = 1e-5
        g = problem.exact.grad_u
        fd = np.stack(((g(x + h, y) - g(x - h, y)) / (2 * h),
                       (g(x, y + h) - g(x, y - h)) / (2 * h)), axis=-1)   # [..., i, j] = d_j g_i
        hess = problem.exact.hess_u(x, y)
        scale = 1 + np.abs(hess).max()
        assert np.allclose(fd, hess, rtol=1e-5, atol=1e-5 * scale)

    def test_smooth_trace_vanishes(self):
        problem = benchmark("smooth-a1")
        t = np.linspace(-0.5, 0.5, 11)
        assert np.allclose(problem.g(t, 0.5 + 0 * t), 0.0, atol=1e-14)
        assert np.allclose(problem.g(-0.5 + 0 * t, t), 0.0, atol=1e-14)

    def test_degenerate_rhs_is_zero(self):
        problem = benchmark("degenerate-x43")
        x, y = interior_samples(problem)
        assert np.array_equal(problem.f(x, y), np.zeros_like(x))

    def test_lshape_rhs(self):
        """u is harmonic, so f = -2 a12 u_xy"""
        problem = benchmark("lshape-a5")
        x, y = interior_samples(problem, seed=5)
        a = problem.coefficient(x, y)
        hess = problem.exact.hess_u(x, y)
        assert np.allclose(hess[..., 0, 0] + hess[..., 1, 1], 0.0, atol=1e-10)
        assert np.allclose(problem.f(x, y), -2 * a[..., 0, 1] * hess[..., 0, 1])

    def test_lshape_solution_on_boundary(self):
        """u vanishes on the edges through the reentrant corner"""
        problem = benchmark("lshape-a7")
        t = np.linspace(0.1, 1.0, 10)
        assert np.allclose(problem.g(t, 0 * t), 0.0, atol=1e-14)
        assert np.allclose(problem.g(0 * t, -t), 0.0, atol=1e-12)

    def test_singular_hessian_guard(self):
        problem = benchmark("singular-r74")
        with pytest.raises(DomainError):
            problem.exact.hess_u(np.array([0.0]), np.array([0.0]))

    def test_domains(self):
        assert benchmark("smooth-a1").domain_id == "unit-square-centered"
        assert benchmark("discont-ss13").domain_id == "biunit-square"
        assert benchmark("singular-r74").domain_id == "half-square"
        assert benchmark("degenerate-x43").domain_id == "unit-square"
        assert benchmark("lshape-a6").domain_id == "L-shape"
