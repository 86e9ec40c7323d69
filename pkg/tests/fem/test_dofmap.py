"""
Unit tests for dofmap.py
Tests global numbering, boundary classification, interpolation and evaluation
"""

import numpy as np
import pytest
from fem.dofmap import build_dofmap, evaluate, interpolate
from fem.elements import element_maps, lagrange_basis
from fem.mesh import bisect, make_initial_mesh, uniform_refine


class TestNumbering:

    def test_two_triangle_p1(self):
        dm = build_dofmap(make_initial_mesh("two-triangle"), 1)
        assert dm.total_dofs == 4
        assert len(dm.boundary_dofs) == 4
        assert len(dm.interior_dofs) == 0

    def test_two_triangle_p2(self):
        mesh = make_initial_mesh("two-triangle")
        dm = build_dofmap(mesh, 2)
        assert mesh.n_edges == 5
        assert dm.total_dofs == 9
        # only the diagonal midpoint is interior
        assert len(dm.interior_dofs) == 1
        assert np.allclose(dm.dof_coordinates[dm.interior_dofs[0]], [0.5, 0.5])

    def test_centered_square_p1(self):
        dm = build_dofmap(make_initial_mesh("unit-square-centered"), 1)
        assert dm.total_dofs == 5
        assert dm.interior_dofs.tolist() == [0]

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_total_formula(self, k):
        mesh = bisect(uniform_refine(make_initial_mesh("L-shape")), {0, 4})
        dm = build_dofmap(mesh, k)
        interior = mesh.n_triangles if k == 3 else 0
        assert dm.total_dofs == mesh.n_vertices + (k - 1) * mesh.n_edges + interior

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_shared_dofs_agree(self, k):
        """Every global DOF has one coordinate, whichever triangle reaches it"""
        mesh = bisect(uniform_refine(make_initial_mesh("unit-square")), {1, 2, 7})
        dm = build_dofmap(mesh, k)
        emap = element_maps(mesh)
        local_coords = emap.to_physical(lagrange_basis(k).nodes)     # (T, n, 2)
        assert np.allclose(local_coords, dm.dof_coordinates[dm.cell_dofs], atol=1e-14)

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_every_dof_used(self, k):
        mesh = uniform_refine(make_initial_mesh("L-shape"))
        dm = build_dofmap(mesh, k)
        counts = np.bincount(dm.cell_dofs.ravel(), minlength=dm.total_dofs)
        assert np.all(counts >= 1)
        assert counts.sum() == dm.cell_dofs.size

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_boundary_dofs_on_boundary(self, k):
        mesh = uniform_refine(make_initial_mesh("unit-square"))
        dm = build_dofmap(mesh, k)
        xy = dm.dof_coordinates
        on_boundary = np.isclose(xy, 0.0).any(axis=1) | np.isclose(xy, 1.0).any(axis=1)
        assert np.array_equal(np.flatnonzero(on_boundary), dm.boundary_dofs)

    def test_deterministic(self):
        mesh = uniform_refine(make_initial_mesh("L-shape"))
        a, b = build_dofmap(mesh, 3), build_dofmap(mesh, 3)
        assert np.array_equal(a.cell_dofs, b.cell_dofs)


class TestInterpolate:

    def test_constant(self):
        dm = build_dofmap(make_initial_mesh("unit-square"), 2)
        assert np.array_equal(interpolate(dm, lambda x, y: 1.0), np.ones(dm.total_dofs))

    def test_linear_field(self):
        dm = build_dofmap(make_initial_mesh("unit-square"), 1)
        assert np.allclose(interpolate(dm, lambda x, y: x), dm.dof_coordinates[:, 0])

    def test_vector_field_component_major(self):
        dm = build_dofmap(make_initial_mesh("unit-square"), 1)
        values = interpolate(dm, lambda x, y: np.stack((x, y), axis=-1))
        assert np.allclose(values[:dm.total_dofs], dm.dof_coordinates[:, 0])
        assert np.allclose(values[dm.total_dofs:], dm.dof_coordinates[:, 1])

    def test_quadratic_reproduced(self):
        """x^2 interpolated in P2 matches x^2 at random points"""
        mesh = uniform_refine(make_initial_mesh("unit-square"))
        dm = build_dofmap(mesh, 2)
        coeffs = interpolate(dm, lambda x, y: x ** 2)

        rng = np.random.default_rng(3)
        ref = rng.random((20, 2)) * 0.5
        elements = rng.integers(0, mesh.n_triangles, size=5)
        emap = element_maps(mesh, elements)
        tab = dm.basis.tabulate(ref)
        values, grads, hess = evaluate(dm, coeffs, tab, emap, elements)
        xq = emap.to_physical(ref)

        assert np.allclose(values, xq[..., 0] ** 2, atol=1e-12)
        assert np.allclose(grads[..., 0], 2 * xq[..., 0], atol=1e-11)
        assert np.allclose(grads[..., 1], 0.0, atol=1e-11)
        assert np.allclose(hess[..., 0, 0], 2.0, atol=1e-9)
