"""
Conforming 2D triangle meshes.

A mesh is an immutable bundle of numpy arrays: vertex coordinates,
counterclockwise triangles, the refinement edge of every triangle and a
per-edge boundary flag. Local edge ``i`` of a triangle is the edge opposite
its local vertex ``i``. Refinement never mutates a mesh; it returns a new one.

Two refinement modes are provided and a study uses only one of them:

* :func:`uniform_refine` -- red refinement, every triangle split into four
  congruent children through its edge midpoints.
* :func:`bisect` -- newest-vertex bisection of a marked set with conformity
  closure.

Example
-------
.. code-block:: python

    from fem.mesh import make_initial_mesh, uniform_refine, bisect
    m = make_initial_mesh("unit-square-centered")
    m = uniform_refine(m)          # 16 triangles
    m = bisect(m, {0, 5})
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Optional, Tuple

import numpy as np

from common.errors import RefinementError

logger = logging.getLogger(__name__)

# vertex pairs of local edges 0, 1, 2 (edge i is opposite vertex i)
LOCAL_EDGES = np.array([[1, 2], [2, 0], [0, 1]])

DOMAINS = (
    "unit-square-centered",
    "unit-square",
    "half-square",
    "biunit-square",
    "L-shape",
    "two-triangle",
)


@dataclass(frozen=True, eq=False)
class Mesh:
    vertices: np.ndarray            # (V, 2) float
    triangles: np.ndarray           # (T, 3) int, counterclockwise
    refinement_edge: np.ndarray     # (T,) local edge index in {0, 1, 2}
    boundary: np.ndarray            # (T, 3) bool, flag of local edge i
    generation: int = 0

    def __post_init__(self):
        vertices = np.array(self.vertices, dtype=float).reshape(-1, 2)
        triangles = np.array(self.triangles, dtype=np.int64).reshape(-1, 3)
        refinement_edge = np.array(self.refinement_edge, dtype=np.int8).reshape(-1)
        boundary = np.array(self.boundary, dtype=bool).reshape(-1, 3)

        if not np.all(np.isfinite(vertices)):
            raise ValueError("Mesh vertices must be finite.")
        if len(refinement_edge) != len(triangles) or len(boundary) != len(triangles):
            raise ValueError("Per-triangle arrays must match the triangle count.")
        if triangles.size and (triangles.min() < 0 or triangles.max() >= len(vertices)):
            raise ValueError("Triangle references a vertex index out of range.")
        if np.any((refinement_edge < 0) | (refinement_edge > 2)):
            raise ValueError("refinement_edge must be 0, 1 or 2.")

        for name, arr in (("vertices", vertices), ("triangles", triangles),
                          ("refinement_edge", refinement_edge), ("boundary", boundary)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

        if np.any(self.signed_areas <= 0):
            bad = np.flatnonzero(self.signed_areas <= 0)[:5]
            raise ValueError(f"Triangles {bad.tolist()} are not counterclockwise with positive area.")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @cached_property
    def _edge_data(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        keys = edge_keys(self.triangles, self.n_vertices)
        unique, inverse, counts = np.unique(keys.ravel(), return_inverse=True, return_counts=True)
        n = self.n_vertices
        edges = np.column_stack((unique // n, unique % n))
        return edges, inverse.reshape(-1, 3), counts

    @property
    def edges(self) -> np.ndarray:
        """(E, 2) unique edges, lower vertex index first, sorted by key."""
        return self._edge_data[0]

    @property
    def triangle_edges(self) -> np.ndarray:
        """(T, 3) global edge index of local edge i."""
        return self._edge_data[1]

    @property
    def edge_multiplicity(self) -> np.ndarray:
        """(E,) number of triangles incident to each edge."""
        return self._edge_data[2]

    @cached_property
    def boundary_edges(self) -> np.ndarray:
        """Global indices of edges flagged as boundary."""
        return np.unique(self.triangle_edges[self.boundary])

    @cached_property
    def diameters(self) -> np.ndarray:
        """Longest edge length of every triangle."""
        return edge_lengths(self.vertices, self.triangles).max(axis=1)

    @property
    def h_max(self) -> float:
        return float(self.diameters.max())


def edge_keys(triangles: np.ndarray, n_vertices: int) -> np.ndarray:
    """(T, 3) integer key lo * n_vertices + hi of local edge i."""
    a = triangles[:, LOCAL_EDGES[:, 0]]
    b = triangles[:, LOCAL_EDGES[:, 1]]
    return np.minimum(a, b) * n_vertices + np.maximum(a, b)


def edge_lengths(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    p = vertices[triangles]
    d = p[:, LOCAL_EDGES[:, 1]] - p[:, LOCAL_EDGES[:, 0]]
    return np.hypot(d[..., 0], d[..., 1])


def longest_edge(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Local index of the longest edge; ties go to the lowest local index."""
    lengths = edge_lengths(vertices, triangles)
    longest = lengths.max(axis=1, keepdims=True)
    return np.argmax(lengths >= longest * (1.0 - 1e-12), axis=1)


def boundary_flags(triangles: np.ndarray, n_vertices: int) -> np.ndarray:
    """Flag local edges incident to exactly one triangle."""
    keys = edge_keys(triangles, n_vertices)
    _, inverse, counts = np.unique(keys.ravel(), return_inverse=True, return_counts=True)
    return (counts[inverse] == 1).reshape(-1, 3)


def mesh_from_arrays(
    vertices,
    triangles,
    refinement_edge: Optional[np.ndarray] = None,
    boundary: Optional[np.ndarray] = None,
    generation: int = 0,
) -> Mesh:
    """
    Build a mesh from raw arrays.

    Missing boundary flags are detected from edge incidence; missing
    refinement edges default to the longest edge of each triangle.
    """
    vertices = np.asarray(vertices, dtype=float)
    triangles = np.asarray(triangles, dtype=np.int64)
    if refinement_edge is None:
        refinement_edge = longest_edge(vertices, triangles)
    if boundary is None:
        boundary = boundary_flags(triangles, len(vertices))
    return Mesh(vertices, triangles, refinement_edge, boundary, generation)


def _crossed_square(x0: float, x1: float, y0: float, y1: float) -> Tuple[np.ndarray, np.ndarray]:
    cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
    vertices = np.array([[cx, cy], [x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    triangles = np.array([[0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 1]])
    return vertices, triangles


def make_initial_mesh(domain_id: str) -> Mesh:
    """
    Initial mesh of a named domain.

    The square domains use the two-diagonal mesh (four triangles around the
    center), the L-shape a six-triangle fan around the reentrant corner.
    """
    if domain_id == "unit-square-centered":
        vertices, triangles = _crossed_square(-0.5, 0.5, -0.5, 0.5)
    elif domain_id == "unit-square":
        vertices, triangles = _crossed_square(0.0, 1.0, 0.0, 1.0)
    elif domain_id == "half-square":
        vertices, triangles = _crossed_square(0.0, 0.5, 0.0, 0.5)
    elif domain_id == "biunit-square":
        vertices, triangles = _crossed_square(-1.0, 1.0, -1.0, 1.0)
    elif domain_id == "two-triangle":
        vertices = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
        triangles = np.array([[0, 1, 2], [0, 2, 3]])
    elif domain_id == "L-shape":
        # (-1,1)^2 minus [0,1)x(-1,0], fan around the origin
        vertices = np.array([
            [0.0, 0.0],
            [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [-1.0, 1.0],
            [-1.0, 0.0], [-1.0, -1.0], [0.0, -1.0],
        ])
        triangles = np.array([[0, i, i + 1] for i in range(1, 7)])
    else:
        raise ValueError(f"Unknown domain {domain_id!r}, expected one of {DOMAINS}")
    return mesh_from_arrays(vertices, triangles)


def element_diameter(mesh: Mesh, k: int) -> float:
    """Diameter h_K of triangle k (its longest edge)."""
    return float(mesh.diameters[k])


def uniform_refine(mesh: Mesh) -> Mesh:
    """Red refinement: four congruent children per triangle, children of t at 4t..4t+3."""
    t = mesh.triangles
    b = mesh.boundary
    n = mesh.n_vertices
    edges = mesh.edges

    midpoints = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])
    new_vertices = np.vstack((mesh.vertices, midpoints))

    # m_i: midpoint of the edge opposite vertex i
    m = n + mesh.triangle_edges
    v0, v1, v2 = t[:, 0], t[:, 1], t[:, 2]
    m0, m1, m2 = m[:, 0], m[:, 1], m[:, 2]
    b0, b1, b2 = b[:, 0], b[:, 1], b[:, 2]
    off = np.zeros_like(b0)

    children = np.stack((
        np.column_stack((v0, m2, m1)),
        np.column_stack((m2, v1, m0)),
        np.column_stack((m1, m0, v2)),
        np.column_stack((m0, m1, m2)),
    ), axis=1).reshape(-1, 3)
    flags = np.stack((
        np.column_stack((off, b1, b2)),
        np.column_stack((b0, off, b2)),
        np.column_stack((b0, b1, off)),
        np.column_stack((off, off, off)),
    ), axis=1).reshape(-1, 3)

    refined = Mesh(
        new_vertices,
        children,
        longest_edge(new_vertices, children),
        flags,
        mesh.generation + 1,
    )
    logger.debug("red refinement: %d -> %d triangles", mesh.n_triangles, refined.n_triangles)
    return refined


def _rotate_to_refinement_edge(mesh: Mesh) -> Tuple[np.ndarray, np.ndarray]:
    """Cyclically rotate every triangle so its refinement edge is local edge 0."""
    rows = np.arange(mesh.n_triangles)[:, None]
    perm = (np.arange(3)[None, :] + mesh.refinement_edge[:, None].astype(np.int64)) % 3
    return mesh.triangles[rows, perm], mesh.boundary[rows, perm]


def bisect(mesh: Mesh, marked: Iterable[int]) -> Mesh:
    """
    Newest-vertex bisection of the marked triangles with conformity closure.

    Algorithm:
    1. mark the refinement edge of every marked triangle
    2. closure: any triangle with a marked edge gets its refinement edge
       marked too, until nothing changes
    3. put one new vertex on every marked edge
    4. bisect every triangle whose refinement edge carries a new vertex,
       repeat on the children (at most two rounds)

    Children get the new vertex as their newest vertex, so their refinement
    edges are the two remaining edges of the parent.
    """
    marked = np.unique(np.fromiter((int(i) for i in marked), dtype=np.int64))
    if marked.size == 0:
        return mesh
    if marked[0] < 0 or marked[-1] >= mesh.n_triangles:
        raise ValueError(f"Marked triangle index out of range [0, {mesh.n_triangles}).")

    tri, bnd = _rotate_to_refinement_edge(mesh)
    n = mesh.n_vertices
    keys = edge_keys(tri, n)
    unique, inverse = np.unique(keys.ravel(), return_inverse=True)
    tri_edges = inverse.reshape(-1, 3)

    cut = np.zeros(len(unique), dtype=bool)
    cut[tri_edges[marked, 0]] = True
    for _ in range(len(unique) + 1):
        spread = cut[tri_edges].any(axis=1) & ~cut[tri_edges[:, 0]]
        if not spread.any():
            break
        cut[tri_edges[spread, 0]] = True
    else:
        raise RefinementError(
            f"bisection closure did not settle on a mesh with {mesh.n_triangles} triangles"
        )

    cut_keys = unique[cut]
    lo, hi = cut_keys // n, cut_keys % n
    new_ids = n + np.arange(len(cut_keys))
    vertices = np.vstack((mesh.vertices, 0.5 * (mesh.vertices[lo] + mesh.vertices[hi])))

    # re-key the cut edges against the enlarged vertex count
    total = len(vertices)
    lookup = lo * total + hi
    order = np.argsort(lookup)
    lookup, new_ids = lookup[order], new_ids[order]

    for _ in range(3):
        a1, a2 = tri[:, 1], tri[:, 2]
        k0 = np.minimum(a1, a2) * total + np.maximum(a1, a2)
        pos = np.minimum(np.searchsorted(lookup, k0), len(lookup) - 1)
        hit = lookup[pos] == k0
        if not hit.any():
            break
        mid = new_ids[pos[hit]]
        a0, a1, a2 = tri[hit, 0], tri[hit, 1], tri[hit, 2]
        b0, b1, b2 = bnd[hit, 0], bnd[hit, 1], bnd[hit, 2]
        off = np.zeros_like(b0)

        left = np.column_stack((mid, a0, a1))
        right = np.column_stack((mid, a2, a0))
        tri = tri.copy()
        bnd = bnd.copy()
        tri[hit] = left
        bnd[hit] = np.column_stack((b2, b0, off))
        tri = np.vstack((tri, right))
        bnd = np.vstack((bnd, np.column_stack((b1, off, b0))))
    else:
        raise RefinementError("a triangle needed more than two bisections in one refinement step")

    refined = Mesh(vertices, tri, np.zeros(len(tri), dtype=np.int8), bnd, mesh.generation + 1)
    logger.debug(
        "bisection: %d marked, %d edges cut, %d -> %d triangles",
        len(marked), len(cut_keys), mesh.n_triangles, refined.n_triangles,
    )
    return refined


def total_area(mesh: Mesh) -> float:
    return float(mesh.signed_areas.sum())


def triangle_angles(mesh: Mesh) -> np.ndarray:
    """(T, 3) interior angle at local vertex i."""
    lengths = edge_lengths(mesh.vertices, mesh.triangles)   # edge i is opposite vertex i
    a, b, c = lengths[:, 0], lengths[:, 1], lengths[:, 2]
    cos_a = (b * b + c * c - a * a) / (2 * b * c)
    cos_b = (a * a + c * c - b * b) / (2 * a * c)
    cos_c = (a * a + b * b - c * c) / (2 * a * b)
    return np.arccos(np.clip(np.column_stack((cos_a, cos_b, cos_c)), -1.0, 1.0))


def min_angle(mesh: Mesh) -> float:
    return float(triangle_angles(mesh).min())


def is_conforming(mesh: Mesh) -> bool:
    """
    Edge-incidence scan: every edge has one or two incident triangles and an
    edge carries the boundary flag exactly when it has one. A hanging node
    leaves an unflagged edge with a single incident triangle.
    """
    counts = mesh.edge_multiplicity
    if np.any((counts < 1) | (counts > 2)):
        return False
    single = counts[mesh.triangle_edges] == 1
    return bool(np.array_equal(single, mesh.boundary))


def dump_mesh(mesh: Mesh, path: str | Path) -> None:
    """
    Write the plain-text mesh format:

        V T G               (counts and refinement generation)
        x y                 (V lines)
        i j k b0 b1 b2      (T lines, local vertex 0 = newest vertex)
    """
    tri, bnd = _rotate_to_refinement_edge(mesh)
    with open(path, "w", encoding="utf-8") as fp:
        fp.write(f"{mesh.n_vertices} {mesh.n_triangles} {mesh.generation}\n")
        for x, y in mesh.vertices:
            fp.write(f"{x:.17g} {y:.17g}\n")
        for (i, j, k), (b0, b1, b2) in zip(tri, bnd):
            fp.write(f"{i} {j} {k} {int(b0)} {int(b1)} {int(b2)}\n")


def load_mesh(path: str | Path) -> Mesh:
    """Read a dump_mesh file; a header without the generation field reads as generation 0."""
    with open(path, "r", encoding="utf-8") as fp:
        header = [int(v) for v in fp.readline().split()]
        if len(header) not in (2, 3):
            raise ValueError(f"{path}: expected 'V T G' header, got {header}")
        n_vertices, n_triangles = header[:2]
        generation = header[2] if len(header) == 3 else 0
        vertices = np.array([[float(v) for v in fp.readline().split()] for _ in range(n_vertices)])
        rows = np.array([[int(v) for v in fp.readline().split()] for _ in range(n_triangles)],
                        dtype=np.int64).reshape(-1, 6)
    return Mesh(vertices, rows[:, :3], np.zeros(n_triangles, dtype=np.int8), rows[:, 3:].astype(bool),
                generation=generation)
