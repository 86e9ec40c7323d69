"""
Unit tests for mesh.py
Tests initial meshes, red refinement, newest-vertex bisection and the mesh dump
"""

import numpy as np
import pytest
from fem.mesh import (
    bisect, dump_mesh, element_diameter, is_conforming, load_mesh, make_initial_mesh,
    mesh_from_arrays, min_angle, total_area, triangle_angles, uniform_refine,
)


def single_triangle(points):
    return mesh_from_arrays(np.array(points, dtype=float), np.array([[0, 1, 2]]))


class TestInitialMesh:
    """Named domains"""

    def test_centered_square(self):
        mesh = make_initial_mesh("unit-square-centered")
        assert mesh.n_triangles == 4
        assert mesh.n_vertices == 5
        assert total_area(mesh) == pytest.approx(1.0)

    def test_two_triangle(self):
        mesh = make_initial_mesh("two-triangle")
        assert mesh.n_triangles == 2
        assert mesh.n_vertices == 4

    def test_l_shape(self):
        mesh = make_initial_mesh("L-shape")
        assert mesh.n_triangles == 6
        assert mesh.n_vertices == 8
        assert total_area(mesh) == pytest.approx(3.0)
        assert is_conforming(mesh)

    def test_boundary_edges_of_square(self):
        mesh = make_initial_mesh("unit-square")
        # four outer edges, the diagonals are interior
        assert len(mesh.boundary_edges) == 4
        assert mesh.n_edges == 8

    @pytest.mark.parametrize("domain", ["unit-square-centered", "unit-square", "half-square",
                                        "biunit-square", "L-shape", "two-triangle"])
    def test_all_conforming(self, domain):
        assert is_conforming(make_initial_mesh(domain))

    def test_unknown_domain(self):
        with pytest.raises(ValueError):
            make_initial_mesh("circle")

    def test_clockwise_rejected(self):
        with pytest.raises(ValueError):
            mesh_from_arrays([[0, 0], [0, 1], [1, 0]], [[0, 1, 2]])


class TestElementDiameter:

    def test_right_triangle(self):
        mesh = single_triangle([[0, 0], [1, 0], [0, 1]])
        assert element_diameter(mesh, 0) == pytest.approx(np.sqrt(2.0))

    def test_equilateral(self):
        mesh = single_triangle([[0, 0], [1, 0], [0.5, np.sqrt(3.0) / 2]])
        assert element_diameter(mesh, 0) == pytest.approx(1.0)

    def test_longest_edge(self):
        mesh = single_triangle([[0, 0], [2, 0], [0, 1]])
        assert element_diameter(mesh, 0) == pytest.approx(np.sqrt(5.0))

    def test_initial_refinement_edge_is_longest(self):
        mesh = single_triangle([[0, 0], [2, 0], [0, 1]])
        # hypotenuse (2,0)-(0,1) is opposite vertex 0
        assert mesh.refinement_edge[0] == 0


class TestUniformRefine:
    """Red refinement"""

    def test_counts(self):
        mesh = make_initial_mesh("unit-square-centered")
        once = uniform_refine(mesh)
        assert once.n_triangles == 16
        assert once.n_vertices == 13
        assert uniform_refine(once).n_triangles == 64

    def test_euler(self):
        mesh = uniform_refine(uniform_refine(make_initial_mesh("L-shape")))
        assert mesh.n_vertices - mesh.n_edges + mesh.n_triangles == 1

    def test_area_and_conformity(self):
        mesh = make_initial_mesh("L-shape")
        for _ in range(3):
            mesh = uniform_refine(mesh)
            assert is_conforming(mesh)
            assert total_area(mesh) == pytest.approx(3.0, rel=1e-12)

    def test_h_halves(self):
        mesh = make_initial_mesh("unit-square")
        assert uniform_refine(mesh).h_max == pytest.approx(mesh.h_max / 2)

    def test_children_similar(self):
        """Red children keep the angles of the parent"""
        mesh = single_triangle([[0, 0], [3, 0], [1, 2]])
        parent = np.sort(triangle_angles(mesh)[0])
        child = np.sort(triangle_angles(uniform_refine(mesh)), axis=1)
        assert np.allclose(child, parent)

    def test_boundary_flags_propagate(self):
        mesh = uniform_refine(make_initial_mesh("unit-square"))
        assert len(mesh.boundary_edges) == 8
        assert is_conforming(mesh)


class TestBisect:
    """Newest-vertex bisection"""

    def test_empty_marking(self):
        mesh = make_initial_mesh("unit-square")
        assert bisect(mesh, []) is mesh

    def test_mark_all(self):
        mesh = make_initial_mesh("unit-square-centered")
        refined = bisect(mesh, range(mesh.n_triangles))
        assert refined.n_triangles == 8
        assert is_conforming(refined)

    def test_mark_one(self):
        mesh = make_initial_mesh("unit-square-centered")
        refined = bisect(mesh, {0})
        assert refined.n_triangles == 5
        assert is_conforming(refined)

    def test_closure_propagates(self):
        """Marking one small triangle forces its coarse neighbours to split"""
        mesh = make_initial_mesh("unit-square")
        mesh = bisect(mesh, {0})
        mesh = bisect(mesh, {0})
        mesh = bisect(mesh, {0})
        assert is_conforming(mesh)
        assert total_area(mesh) == pytest.approx(1.0, rel=1e-12)

    def test_out_of_range(self):
        mesh = make_initial_mesh("unit-square")
        with pytest.raises(ValueError):
            bisect(mesh, {17})

    def test_mixed_steps_conforming(self):
        """Ten refinement steps with random markings keep the mesh conforming"""
        rng = np.random.default_rng(7)
        mesh = make_initial_mesh("L-shape")
        for step in range(10):
            if step % 4 == 0:
                mesh = uniform_refine(mesh)
            else:
                marked = rng.choice(mesh.n_triangles, size=max(1, mesh.n_triangles // 5), replace=False)
                mesh = bisect(mesh, marked)
            assert is_conforming(mesh)
            assert total_area(mesh) == pytest.approx(3.0, rel=1e-12)

    def test_similarity_classes(self):
        """Ten bisection generations of one triangle produce at most four shapes"""
        mesh = single_triangle([[0, 0], [1, 0], [0.3, 0.8]])
        signatures = set()
        for _ in range(10):
            mesh = bisect(mesh, range(mesh.n_triangles))
            for angles in np.sort(triangle_angles(mesh), axis=1):
                signatures.add(tuple(np.round(angles, 8)))
        assert len(signatures) <= 4

    def test_min_angle_bounded(self):
        mesh = make_initial_mesh("unit-square-centered")
        initial = min_angle(mesh)
        for _ in range(6):
            centre = np.argmin(np.hypot(*mesh.vertices[mesh.triangles].mean(axis=1).T))
            mesh = bisect(mesh, {int(centre)})
        assert min_angle(mesh) >= 0.5 * initial

    def test_generation_counter(self):
        mesh = make_initial_mesh("unit-square")
        assert bisect(mesh, {1}).generation == 1
        assert uniform_refine(mesh).generation == 1


class TestConformityScan:

    def test_hanging_node_detected(self):
        vertices = [[0, 0], [2, 0], [2, 2], [0, 2], [1, 1]]
        triangles = [[0, 1, 2], [0, 4, 3], [4, 2, 3]]
        boundary = [[True, False, True], [False, True, False], [True, False, False]]
        mesh = mesh_from_arrays(vertices, triangles, boundary=np.array(boundary))
        assert not is_conforming(mesh)


class TestDump:
    """Plain-text mesh format"""

    def test_round_trip(self, tmp_path):
        mesh = bisect(uniform_refine(make_initial_mesh("L-shape")), {0, 3, 9})
        path = tmp_path / "mesh.txt"
        dump_mesh(mesh, path)
        loaded = load_mesh(path)

        assert np.array_equal(loaded.vertices, mesh.vertices)
        assert loaded.n_triangles == mesh.n_triangles
        assert is_conforming(loaded)
        assert total_area(loaded) == pytest.approx(3.0)

    def test_header_line(self, tmp_path):
        mesh = make_initial_mesh("two-triangle")
        path = tmp_path / "mesh.txt"
        dump_mesh(mesh, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "4 2 0"
        assert len(lines) == 1 + 4 + 2
        assert len(lines[-1].split()) == 6

    def test_refinement_continues_identically(self, tmp_path):
        mesh = bisect(make_initial_mesh("unit-square"), {0})
        path = tmp_path / "mesh.txt"
        dump_mesh(mesh, path)
        a = bisect(mesh, range(mesh.n_triangles))
        b = bisect(load_mesh(path), range(mesh.n_triangles))
        assert a.n_triangles == b.n_triangles
        assert total_area(a) == pytest.approx(total_area(b))

    def test_generation_round_trip(self, tmp_path):
        mesh = bisect(uniform_refine(uniform_refine(make_initial_mesh("unit-square"))), {2})
        assert mesh.generation == 3
        path = tmp_path / "mesh.txt"
        dump_mesh(mesh, path)
        loaded = load_mesh(path)
        assert loaded.generation == 3
        assert bisect(loaded, {0}).generation == 4

    def test_header_without_generation(self, tmp_path):
        path = tmp_path / "mesh.txt"
        path.write_text("3 1\n0 0\n1 0\n0 1\n0 1 2 1 1 1\n")
        mesh = load_mesh(path)
        assert mesh.generation == 0
        assert mesh.n_triangles == 1

    def test_bad_header(self, tmp_path):
        path = tmp_path / "mesh.txt"
        path.write_text("3\n")
        with pytest.raises(ValueError):
            load_mesh(path)
