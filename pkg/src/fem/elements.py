"""
Lagrange P1, P2, P3 bases on the reference triangle and the affine element map.

Reference triangle: vertices (0,0), (1,0), (0,1); barycentric coordinates
lambda_0 = 1 - xi - eta, lambda_1 = xi, lambda_2 = eta.

Local node order: the three vertices, then the edge nodes of local edge
0, 1, 2 (edge i joins vertices i+1 and i+2, nodes listed from vertex i+1
towards vertex i+2), then the interior node (k = 3 only).

Every basis function is a product of univariate factors of the barycentric
coordinates (Silvester's form), which makes values and derivatives exact
polynomial evaluations without inverting a Vandermonde matrix.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from numpy.polynomial import Polynomial

from common.constants import MAX_DEGREE

# d lambda / d (xi, eta)
_BARY_GRAD = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
_REF_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


@dataclass(frozen=True)
class BasisTabulation:
    values: np.ndarray      # (Q, n)
    gradients: np.ndarray   # (Q, n, 2)   reference coordinates
    hessians: np.ndarray    # (Q, n, 2, 2)


@dataclass(frozen=True, eq=False)
class ReferenceBasis:
    degree: int
    multi_indices: np.ndarray   # (n, 3) barycentric lattice index, sums to degree
    nodes: np.ndarray           # (n, 2) reference coordinates of the Lagrange nodes

    @property
    def node_count(self) -> int:
        return len(self.multi_indices)

    @property
    def edge_node_count(self) -> int:
        return self.degree - 1

    @property
    def interior_node_count(self) -> int:
        return (self.degree - 1) * (self.degree - 2) // 2

    def tabulate(self, points) -> BasisTabulation:
        """Values, reference gradients and reference Hessians at (Q, 2) points."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        lam = np.column_stack((1.0 - points[:, 0] - points[:, 1], points[:, 0], points[:, 1]))
        factors = _factor_polynomials(self.degree)

        q, n = len(points), self.node_count
        p0 = np.empty((q, n, 3))
        p1 = np.empty((q, n, 3))
        p2 = np.empty((q, n, 3))
        for a, alpha in enumerate(self.multi_indices):
            for i in range(3):
                poly, d1, d2 = factors[alpha[i]]
                p0[:, a, i] = poly(lam[:, i])
                p1[:, a, i] = d1(lam[:, i])
                p2[:, a, i] = d2(lam[:, i])

        values = p0.prod(axis=2)

        grad_bary = np.empty((q, n, 3))
        hess_bary = np.empty((q, n, 3, 3))
        for i in range(3):
            j, l = (i + 1) % 3, (i + 2) % 3
            grad_bary[..., i] = p1[..., i] * p0[..., j] * p0[..., l]
            hess_bary[..., i, i] = p2[..., i] * p0[..., j] * p0[..., l]
            hess_bary[..., i, j] = hess_bary[..., j, i] = p1[..., i] * p1[..., j] * p0[..., l]

        gradients = grad_bary @ _BARY_GRAD
        hessians = np.einsum("ai,qnab,bj->qnij", _BARY_GRAD, hess_bary, _BARY_GRAD)
        return BasisTabulation(values, gradients, hessians)


@lru_cache(maxsize=None)
def _factor_polynomials(k: int):
    """p_m(l) = prod_{j<m} (k l - j) / (j + 1) with first and second derivatives, m = 0..k."""
    out = []
    poly = Polynomial([1.0])
    for m in range(k + 1):
        out.append((poly, poly.deriv(1), poly.deriv(2)))
        poly = poly * Polynomial([-float(m), float(k)]) / (m + 1)
    return tuple(out)


def _lattice(k: int) -> np.ndarray:
    indices = [[k if i == v else 0 for i in range(3)] for v in range(3)]
    for e in range(3):
        a, b = (e + 1) % 3, (e + 2) % 3
        for j in range(1, k):
            alpha = [0, 0, 0]
            alpha[a], alpha[b] = k - j, j
            indices.append(alpha)
    for i in range(1, k):
        for j in range(1, k - i):
            indices.append([k - i - j, i, j])
    return np.array(indices, dtype=np.int64)


@lru_cache(maxsize=None)
def lagrange_basis(degree: int) -> ReferenceBasis:
    if degree not in range(1, MAX_DEGREE + 1):
        raise ValueError(f"Unsupported element degree {degree}, expected 1..{MAX_DEGREE}.")
    alpha = _lattice(degree)
    nodes = (alpha / degree) @ _REF_VERTICES
    alpha.flags.writeable = False
    nodes.flags.writeable = False
    return ReferenceBasis(degree, alpha, nodes)


def basis_eval(degree: int, point) -> BasisTabulation:
    """
    Evaluate the degree-k basis at one point or a (Q, 2) array of points of
    the closed reference triangle.
    """
    basis = lagrange_basis(degree)
    points = np.atleast_2d(np.asarray(point, dtype=float))
    tol = 1e-12
    if np.any(points < -tol) or np.any(points.sum(axis=1) > 1.0 + tol):
        raise ValueError("Evaluation point lies outside the reference triangle.")
    return basis.tabulate(points)


@dataclass(frozen=True, eq=False)
class ElementMap:
    """
    Affine maps F_K(p) = origin + J p for a batch of triangles.

    jacobian[e] has columns P1 - P0 and P2 - P0.
    """
    origin: np.ndarray          # (E, 2)
    jacobian: np.ndarray        # (E, 2, 2)
    inv_jacobian: np.ndarray    # (E, 2, 2)
    det: np.ndarray             # (E,)

    @classmethod
    def from_vertices(cls, corners) -> "ElementMap":
        corners = np.asarray(corners, dtype=float).reshape(-1, 3, 2)
        origin = corners[:, 0]
        jac = np.stack((corners[:, 1] - origin, corners[:, 2] - origin), axis=2)
        det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
        scale = np.abs(jac).max(axis=(1, 2)) ** 2
        if np.any(det <= 1e-14 * scale):
            raise ValueError("Singular or inverted element Jacobian.")
        inv = np.empty_like(jac)
        inv[:, 0, 0] = jac[:, 1, 1] / det
        inv[:, 0, 1] = -jac[:, 0, 1] / det
        inv[:, 1, 0] = -jac[:, 1, 0] / det
        inv[:, 1, 1] = jac[:, 0, 0] / det
        return cls(origin, jac, inv, det)

    def __len__(self) -> int:
        return len(self.det)

    def to_physical(self, ref_points) -> np.ndarray:
        """(E, Q, 2) physical images of (Q, 2) reference points."""
        ref_points = np.atleast_2d(np.asarray(ref_points, dtype=float))
        return self.origin[:, None, :] + np.einsum("eij,qj->eqi", self.jacobian, ref_points)


def element_maps(mesh, elements: Optional[np.ndarray] = None) -> ElementMap:
    tri = mesh.triangles if elements is None else mesh.triangles[elements]
    return ElementMap.from_vertices(mesh.vertices[tri])


def push_gradient(emap: ElementMap, reference_gradient) -> np.ndarray:
    """grad_phys = J^{-T} grad_ref; result has a leading element axis."""
    g = np.asarray(reference_gradient, dtype=float)
    return np.einsum("eji,...j->e...i", emap.inv_jacobian, g)


def push_hessian(emap: ElementMap, reference_hessian) -> np.ndarray:
    """hess_phys = J^{-T} hess_ref J^{-1}; affine maps have no curvature term."""
    h = np.asarray(reference_hessian, dtype=float)
    return np.einsum("eki,...kl,elj->e...ij", emap.inv_jacobian, h, emap.inv_jacobian)
