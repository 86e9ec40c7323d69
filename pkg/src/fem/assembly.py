"""
Least-squares system assembly for -A:D^2u = f written as the first-order
system sigma - grad u = 0, -A:grad sigma = f.

For every element K with weight w_K (h_K^2 for the weighted form, 1 for
the L2 form) the local matrix and load are

    K_K = (M (rho - grad w), tau - grad v)_K + w_K (A:grad rho, A:grad tau)_K
    F_K = -w_K (f, A:grad tau)_K

where M = I, or M = A for the coefficient-weighted first-order residual
||A^{1/2}(tau - grad v)||. The latter needs A uniformly positive definite.

Local unknowns are ordered [u (n_u), sigma_1 (n_s), sigma_2 (n_s)]; the
global vector is laid out the same way block by block (see BlockLayout).
Boundary u-DOFs carry the nodal interpolant of g and are eliminated
symmetrically.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp

from common.config import check_flux_weight, check_method
from common.constants import (
    ASSEMBLY_CHUNK, ASSEMBLY_QUAD_MARGIN, FLUX_WEIGHT_COEFFICIENT, FLUX_WEIGHT_IDENTITY, FORMULATION_WEIGHTED,
)
from common.errors import DomainError
from common.stats import RunStats
from fem.dofmap import DofMap, build_dofmap
from fem.elements import element_maps, push_gradient
from fem.mesh import Mesh
from fem.quadrature import rule_for_degree

logger = logging.getLogger(__name__)


def sigma_degree(formulation: str, degree: int) -> int:
    """Polynomial degree of the flux space: 1 for L2, k - 1 for the weighted form."""
    return degree - 1 if formulation == FORMULATION_WEIGHTED else 1


@dataclass(frozen=True, eq=False)
class BlockLayout:
    n_u: int
    n_sigma: int
    constrained: np.ndarray     # global indices fixed by Dirichlet data (u block only)
    free: np.ndarray            # complement of constrained, sorted

    @property
    def offsets(self) -> Tuple[int, int, int]:
        return 0, self.n_u, self.n_u + self.n_sigma

    @property
    def total(self) -> int:
        return self.n_u + 2 * self.n_sigma

    def block_of(self, index: np.ndarray) -> np.ndarray:
        """0 for u, 1 for sigma_1, 2 for sigma_2."""
        return np.searchsorted(np.array(self.offsets[1:]), index, side="right")

    def split(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x)
        return x[: self.n_u].copy(), x[self.n_u:].reshape(2, self.n_sigma).copy()

    def join(self, u: np.ndarray, sigma: np.ndarray) -> np.ndarray:
        return np.concatenate((np.asarray(u, dtype=float), np.asarray(sigma, dtype=float).ravel()))


@dataclass(frozen=True, eq=False)
class SparseSystem:
    matrix: sp.csr_matrix       # free x free
    rhs: np.ndarray
    layout: BlockLayout
    formulation: str
    degree: int
    full_matrix: sp.csr_matrix  # all DOFs, before elimination
    full_rhs: np.ndarray
    lift: np.ndarray            # g at constrained DOFs, 0 elsewhere
    u_map: DofMap
    sigma_map: DofMap
    flux_weight: str = FLUX_WEIGHT_IDENTITY

    @property
    def n_free(self) -> int:
        return len(self.layout.free)

    def expand(self, x_free: np.ndarray) -> np.ndarray:
        """Full coefficient vector from free values plus the Dirichlet lift."""
        x = self.lift.copy()
        x[self.layout.free] = x_free
        return x


@dataclass(frozen=True, eq=False)
class SolutionPair:
    u_coeffs: np.ndarray        # (n_u,) including boundary values
    sigma_coeffs: np.ndarray    # (2, n_sigma)
    u_map: DofMap
    sigma_map: DofMap

    @classmethod
    def from_vector(cls, system: SparseSystem, x_full: np.ndarray) -> "SolutionPair":
        u, sigma = system.layout.split(x_full)
        return cls(u, sigma, system.u_map, system.sigma_map)

    def to_vector(self) -> np.ndarray:
        return np.concatenate((self.u_coeffs, self.sigma_coeffs.ravel()))


def element_weights(mesh: Mesh, formulation: str, elements: Optional[np.ndarray] = None) -> np.ndarray:
    """h_K^2 (longest edge) for the weighted form, ones for L2."""
    diam = mesh.diameters if elements is None else mesh.diameters[elements]
    if formulation == FORMULATION_WEIGHTED:
        return diam ** 2
    return np.ones_like(diam)


def local_systems(
    mesh: Mesh,
    problem,
    u_map: DofMap,
    sigma_map: DofMap,
    elements: np.ndarray,
    quad_degree: int,
    flux_weight: str = FLUX_WEIGHT_IDENTITY,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Unweighted local pieces for a block of elements.

    Returns (K_ls, K_pde, F_pde) with shapes (E, N, N), (E, N, N), (E, N):
    K_ls from (M (rho - grad w), tau - grad v), K_pde from (A:grad rho, A:grad tau),
    F_pde from -(f, A:grad tau). The caller applies w_K to the last two.
    """
    rule = rule_for_degree(quad_degree)
    tab_u = u_map.basis.tabulate(rule.points)
    tab_s = sigma_map.basis.tabulate(rule.points)
    n_u, n_s = tab_u.values.shape[1], tab_s.values.shape[1]
    n = n_u + 2 * n_s

    emap = element_maps(mesh, elements)
    xq = emap.to_physical(rule.points)
    coeff = problem.coefficient(xq[..., 0], xq[..., 1])             # (E, Q, 2, 2)
    f = np.broadcast_to(problem.f(xq[..., 0], xq[..., 1]), xq.shape[:2])

    grad_u = push_gradient(emap, tab_u.gradients)                    # (E, Q, n_u, 2)
    grad_s = push_gradient(emap, tab_s.gradients)                    # (E, Q, n_s, 2)
    e, q = xq.shape[:2]

    b1 = np.zeros((e, q, 2, n))
    b1[..., :n_u] = -np.swapaxes(grad_u, -1, -2)
    b1[..., 0, n_u:n_u + n_s] = tab_s.values
    b1[..., 1, n_u + n_s:] = tab_s.values

    b2 = np.zeros((e, q, n))
    b2[..., n_u:n_u + n_s] = np.einsum("eqj,eqbj->eqb", coeff[..., 0, :], grad_s)
    b2[..., n_u + n_s:] = np.einsum("eqj,eqbj->eqb", coeff[..., 1, :], grad_s)

    wq = np.abs(emap.det)[:, None] * rule.weights[None, :]
    if flux_weight == FLUX_WEIGHT_COEFFICIENT:
        _require_positive_definite(coeff)
        k_ls = np.einsum("eq,eqcm,eqcd,eqdn->emn", wq, b1, coeff, b1)
    else:
        k_ls = np.einsum("eq,eqcm,eqcn->emn", wq, b1, b1)
    k_pde = np.einsum("eq,eqm,eqn->emn", wq, b2, b2)
    f_pde = -np.einsum("eq,eq,eqm->em", wq, f, b2)
    return k_ls, k_pde, f_pde


def _require_positive_definite(coeff: np.ndarray) -> None:
    det = coeff[..., 0, 0] * coeff[..., 1, 1] - coeff[..., 0, 1] * coeff[..., 1, 0]
    trace = coeff[..., 0, 0] + coeff[..., 1, 1]
    # relative test: a rank-one A evaluates to det of order round-off, not exactly 0
    if np.any(coeff[..., 0, 0] <= 0) or np.any(det <= 1e-12 * trace * trace):
        raise DomainError("coefficient-weighted flux residual needs A positive definite at every quadrature point")


def _global_indices(u_map: DofMap, sigma_map: DofMap, elements: np.ndarray) -> np.ndarray:
    n_u = u_map.total_dofs
    n_s = sigma_map.total_dofs
    s = sigma_map.cell_dofs[elements]
    return np.hstack((u_map.cell_dofs[elements], n_u + s, n_u + n_s + s))


def assemble(
    mesh: Mesh,
    problem,
    formulation: str,
    degree: int,
    stats: Optional[RunStats] = None,
    flux_weight: str = FLUX_WEIGHT_IDENTITY,
) -> SparseSystem:
    """
    Assemble the SPD least-squares system over free DOFs.

    Raises ConfigError (a ValueError) for a formulation/degree pair other
    than l2 with k = 1 or weighted with k in {2, 3}, and DomainError when
    flux_weight="coefficient" meets a coefficient that is not positive
    definite (the degenerate A4, for one).
    """
    check_method(formulation, degree)
    check_flux_weight(flux_weight)

    u_map = build_dofmap(mesh, degree)
    sigma_map = build_dofmap(mesh, sigma_degree(formulation, degree))
    n_u, n_s = u_map.total_dofs, sigma_map.total_dofs
    total = n_u + 2 * n_s
    quad_degree = 2 * degree + ASSEMBLY_QUAD_MARGIN

    rows, cols, vals = [], [], []
    full_rhs = np.zeros(total)
    for start in range(0, mesh.n_triangles, ASSEMBLY_CHUNK):
        elements = np.arange(start, min(start + ASSEMBLY_CHUNK, mesh.n_triangles))
        k_ls, k_pde, f_pde = local_systems(
            mesh, problem, u_map, sigma_map, elements, quad_degree, flux_weight,
        )
        w = element_weights(mesh, formulation, elements)
        local = k_ls + w[:, None, None] * k_pde
        load = w[:, None] * f_pde

        idx = _global_indices(u_map, sigma_map, elements)
        n = idx.shape[1]
        rows.append(np.repeat(idx, n, axis=1).ravel())
        cols.append(np.tile(idx, (1, n)).ravel())
        vals.append(local.ravel())
        np.add.at(full_rhs, idx.ravel(), load.ravel())

    full = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(total, total),
    ).tocsr()

    constrained = u_map.boundary_dofs
    mask = np.ones(total, dtype=bool)
    mask[constrained] = False
    free = np.flatnonzero(mask)

    lift = np.zeros(total)
    xb = u_map.dof_coordinates[constrained]
    lift[constrained] = problem.g(xb[:, 0], xb[:, 1])

    matrix = full[free][:, free].tocsr()
    rhs = full_rhs[free] - full[free][:, constrained] @ lift[constrained]

    layout = BlockLayout(n_u, n_s, constrained, free)
    for arr in (constrained, free, lift, full_rhs, rhs):
        arr.flags.writeable = False

    if stats is not None:
        stats.record_assembly()
    logger.debug(
        "assembled %s k=%d (%s flux weight): %d triangles, %d DOFs (%d free), nnz=%d",
        formulation, degree, flux_weight, mesh.n_triangles, total, len(free), matrix.nnz,
    )
    return SparseSystem(
        matrix, rhs, layout, formulation, degree, full, full_rhs, lift, u_map, sigma_map, flux_weight,
    )
