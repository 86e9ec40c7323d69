"""
Global degree-of-freedom numbering for the scalar Lagrange space S_k.

Numbering: vertex DOFs first (global vertex index), then k-1 DOFs per mesh
edge, then (k = 3) one interior DOF per triangle. Edge DOFs are laid out
from the lower global vertex index towards the higher one, so both
triangles sharing an edge agree on them.

The vector space S_{k-1}^2 for sigma is two copies of the scalar map of
degree k-1, stored component-major (see BlockLayout).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from fem.elements import (
    BasisTabulation, ElementMap, ReferenceBasis, lagrange_basis, element_maps,
    push_gradient, push_hessian,
)
from fem.mesh import Mesh


@dataclass(frozen=True, eq=False)
class DofMap:
    mesh: Mesh
    degree: int
    basis: ReferenceBasis
    cell_dofs: np.ndarray         # (T, n_local) local -> global
    total_dofs: int
    boundary_dofs: np.ndarray     # sorted global indices of DOFs on the boundary
    dof_coordinates: np.ndarray   # (total_dofs, 2)

    @property
    def interior_dofs(self) -> np.ndarray:
        mask = np.ones(self.total_dofs, dtype=bool)
        mask[self.boundary_dofs] = False
        return np.flatnonzero(mask)


def build_dofmap(mesh: Mesh, degree: int) -> DofMap:
    basis = lagrange_basis(degree)
    n_v, n_e, n_t = mesh.n_vertices, mesh.n_edges, mesh.n_triangles
    per_edge = degree - 1
    per_cell = basis.interior_node_count
    total = n_v + per_edge * n_e + per_cell * n_t

    tri = mesh.triangles
    columns = [tri[:, 0], tri[:, 1], tri[:, 2]]

    for e in range(3):
        a, b = tri[:, (e + 1) % 3], tri[:, (e + 2) % 3]
        first = n_v + per_edge * mesh.triangle_edges[:, e]
        forward = a < b
        for j in range(per_edge):
            columns.append(np.where(forward, first + j, first + per_edge - 1 - j))

    for j in range(per_cell):
        columns.append(n_v + per_edge * n_e + per_cell * np.arange(n_t) + j)

    cell_dofs = np.column_stack(columns).astype(np.int64)

    coords = np.empty((total, 2))
    emap = element_maps(mesh)
    coords[cell_dofs] = emap.to_physical(basis.nodes)

    edges = mesh.boundary_edges
    bdofs = [np.unique(mesh.edges[edges].ravel())]
    for j in range(per_edge):
        bdofs.append(n_v + per_edge * edges + j)
    boundary = np.unique(np.concatenate(bdofs)).astype(np.int64)

    for arr in (cell_dofs, boundary, coords):
        arr.flags.writeable = False
    return DofMap(mesh, degree, basis, cell_dofs, total, boundary, coords)


def interpolate(dofmap: DofMap, field: Callable) -> np.ndarray:
    """
    Nodal interpolant of a pointwise field f(x, y).

    A scalar field gives a (total_dofs,) vector; a vector field returning
    (..., 2) gives the component-major concatenation [c_1, c_2].
    """
    x, y = dofmap.dof_coordinates[:, 0], dofmap.dof_coordinates[:, 1]
    values = np.asarray(field(x, y), dtype=float)
    if values.ndim == 2 and values.shape == (dofmap.total_dofs, 2):
        return np.concatenate((values[:, 0], values[:, 1]))
    return np.broadcast_to(values, (dofmap.total_dofs,)).copy()


def evaluate(
    dofmap: DofMap,
    coeffs: np.ndarray,
    tab: BasisTabulation,
    emap: ElementMap,
    elements: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Values (E, Q), physical gradients (E, Q, 2) and physical Hessians
    (E, Q, 2, 2) of the finite element function with the given coefficients
    on the listed elements, at the points the tabulation was made for.
    """
    local = np.asarray(coeffs)[dofmap.cell_dofs[elements]]             # (E, n)
    values = local @ tab.values.T
    grads = np.einsum("en,eqni->eqi", local, push_gradient(emap, tab.gradients))
    hess = np.einsum("en,eqnij->eqij", local, push_hessian(emap, tab.hessians))
    return values, grads, hess
