"""
Linear solve for the assembled least-squares system.

auto: sparse direct factorisation below the DOF threshold, CG with a
block-Jacobi preconditioner above it. Both paths re-insert the Dirichlet
lift and return a SolutionPair over all DOFs.
"""
from __future__ import annotations

import logging
from typing import Callable, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from common.config import SolverConfig
from common.constants import SOLVER_AUTO, SOLVER_CG, SOLVER_DIRECT
from common.errors import SolverError
from common.stats import RunStats
from fem.assembly import BlockLayout, SolutionPair, SparseSystem

logger = logging.getLogger(__name__)


def block_jacobi_preconditioner(matrix: sp.spmatrix, layout: Optional[BlockLayout] = None) -> Callable:
    """
    Exact solves with the diagonal blocks of the free system.

    With a layout the blocks are the free u, sigma_1 and sigma_2 rows
    (each factorised with splu, couplings between blocks dropped);
    without one the whole matrix is a single block. Every block of an SPD
    matrix is SPD, so the preconditioner is SPD as CG requires.
    """
    matrix = sp.csr_matrix(matrix)
    diag = np.asarray(matrix.diagonal(), dtype=float)
    if np.any(diag <= 0):
        raise SolverError("Matrix diagonal is not positive", residual=np.nan, iterations=0)

    if layout is None:
        groups = [np.arange(matrix.shape[0])]
    else:
        blocks = layout.block_of(layout.free)
        groups = [np.flatnonzero(blocks == b) for b in range(3)]
        groups = [g for g in groups if len(g)]

    factors = []
    for rows in groups:
        block = matrix[rows][:, rows].tocsc()
        try:
            factors.append((rows, splu(block)))
        except RuntimeError as exc:
            raise SolverError(f"diagonal block of size {len(rows)} is singular: {exc}",
                              residual=np.nan, iterations=0) from exc
        logger.debug("block of %d rows, nnz=%d, diagonal in [%.3e, %.3e]",
                     len(rows), block.nnz, diag[rows].min(), diag[rows].max())

    def apply(r: np.ndarray) -> np.ndarray:
        z = np.empty_like(r, dtype=float)
        for rows, lu in factors:
            z[rows] = lu.solve(np.ascontiguousarray(r[rows], dtype=float))
        return z

    return apply


def pcg(
    matrix: sp.spmatrix,
    rhs: np.ndarray,
    precondition: Optional[Callable] = None,
    tol: float = 1e-10,
    max_iter: int = 50_000,
    x0: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, int, float]:
    """
    Preconditioned conjugate gradients for an SPD matrix.

    Stops when ||b - A x|| <= tol ||b||. Returns (x, iterations, relative
    residual); raises SolverError after max_iter iterations.
    """
    x = np.zeros(matrix.shape[0]) if x0 is None else np.array(x0, dtype=float)
    if precondition is None:
        def precondition(r):
            return r

    norm_b = np.linalg.norm(rhs)
    if norm_b == 0.0:
        return np.zeros_like(x), 0, 0.0

    r = rhs - matrix @ x
    z = precondition(r)
    p = z.copy()
    rz = r @ z
    residual = np.linalg.norm(r) / norm_b
    for iteration in range(1, max_iter + 1):
        if residual <= tol:
            return x, iteration - 1, residual
        ap = matrix @ p
        alpha = rz / (p @ ap)
        x += alpha * p
        r -= alpha * ap
        residual = np.linalg.norm(r) / norm_b

        z = precondition(r)
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new

    if residual <= tol:
        return x, max_iter, residual
    raise SolverError("CG did not converge", residual=residual, iterations=max_iter)


def check_minimum(system: SparseSystem, x_free: np.ndarray, rng: np.random.Generator, samples: int) -> float:
    """
    Perturb the free solution by `samples` standard normal vectors d and
    check that the functional grows.

    With K x = b the functional changes by d.K d + 2 d.(K x - b). Returns
    the smallest relative growth over the samples; raises SolverError when
    a perturbation lowers the functional.
    """
    residual = system.matrix @ x_free - system.rhs
    worst = np.inf
    for _ in range(samples):
        d = rng.standard_normal(system.n_free)
        curvature = float(d @ (system.matrix @ d))
        growth = curvature + 2.0 * float(d @ residual)
        if not curvature > 0 or not growth > 0:
            raise SolverError(
                f"random perturbation lowers the functional (curvature {curvature:.3e}, change {growth:.3e})",
                residual=float(np.linalg.norm(residual)), iterations=0,
            )
        worst = min(worst, growth / curvature)
    return worst


def choose_method(system: SparseSystem, cfg: SolverConfig) -> str:
    if cfg.method != SOLVER_AUTO:
        return cfg.method
    return SOLVER_DIRECT if system.n_free < cfg.direct_threshold else SOLVER_CG


def solve_ls(
    system: SparseSystem,
    solver_cfg: Optional[SolverConfig] = None,
    stats: Optional[RunStats] = None,
    rng: Optional[np.random.Generator] = None,
) -> SolutionPair:
    """
    Solve the free system and expand to all DOFs.

    With solver_cfg.check_samples > 0 the solution is also checked against
    that many random perturbations drawn from rng (seed 0 when omitted).
    """
    cfg = solver_cfg or SolverConfig()
    method = choose_method(system, cfg)

    iterations = 0
    if system.n_free == 0:
        x_free = np.zeros(0)
    elif method == SOLVER_DIRECT:
        lu = splu(system.matrix.tocsc())
        x_free = lu.solve(np.asarray(system.rhs, dtype=float))
    else:
        precond = block_jacobi_preconditioner(system.matrix, system.layout)
        x_free, iterations, residual = pcg(
            system.matrix, system.rhs, precond, tol=cfg.tol, max_iter=cfg.max_iter,
        )
        logger.debug("CG converged in %d iterations (relative residual %.3e)", iterations, residual)

    if cfg.check_samples and system.n_free:
        worst = check_minimum(system, x_free, rng if rng is not None else np.random.default_rng(0),
                              cfg.check_samples)
        logger.debug("minimality check: %d samples, smallest relative growth %.6f", cfg.check_samples, worst)

    if stats is not None:
        stats.record_solve(SOLVER_CG if method == SOLVER_CG else SOLVER_DIRECT, iterations)
    logger.debug("solved %d free DOFs with %s", system.n_free, method)
    return SolutionPair.from_vector(system, system.expand(x_free))
