"""
Element indicators, the least-squares functional and exact-error norms.

    eta_K^2 = w_K ||f + A:grad sigma_h||_K^2 + ||M^{1/2}(sigma_h - grad u_h)||_K^2

with w_K = h_K^2 (weighted) or 1 (L2), and M = I or A as for assembly. Indicators and exact errors are
integrated with the same rule (degree 2k + NORM_QUAD_MARGIN), so for a
consistent problem eta equals the least-squares error norm up to rounding.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from common.constants import ASSEMBLY_CHUNK, FLUX_WEIGHT_COEFFICIENT, FLUX_WEIGHT_IDENTITY, NORM_QUAD_MARGIN
from fem.assembly import SolutionPair, element_weights
from fem.dofmap import evaluate
from fem.elements import element_maps
from fem.mesh import Mesh
from fem.quadrature import rule_for_degree

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ElementIndicator:
    eta_squared: np.ndarray     # (T,)
    formulation: str

    @property
    def eta(self) -> float:
        return float(np.sqrt(self.eta_squared.sum()))

    def __len__(self) -> int:
        return len(self.eta_squared)


@dataclass
class ErrorReport:
    ls: float
    l2u: float
    h1u: float
    l2sigma: float
    wbh2A: float
    wbh2: float
    eta: float
    dofs: int
    level: int = 0
    nodes: int = 0
    hmax: float = float("nan")
    local_ls: Optional[np.ndarray] = field(default=None, repr=False)

    def norm(self, name: str) -> float:
        return float(getattr(self, name))

    def as_row(self) -> Dict[str, float]:
        return {
            "level": self.level, "dofs": self.dofs, "nodes": self.nodes, "hmax": self.hmax,
            "ls": self.ls, "eta": self.eta, "l2u": self.l2u, "h1u": self.h1u,
            "l2sigma": self.l2sigma, "wbh2A": self.wbh2A, "wbh2": self.wbh2,
        }


def norm_quad_degree(degree: int) -> int:
    return 2 * degree + NORM_QUAD_MARGIN


def _frobenius(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.einsum("...ij,...ij->...", a, b)


def _weighted_square(r: np.ndarray, coeff: np.ndarray, flux_weight: str) -> np.ndarray:
    if flux_weight == FLUX_WEIGHT_COEFFICIENT:
        return np.einsum("...i,...ij,...j->...", r, coeff, r)
    return (r ** 2).sum(axis=-1)


def _element_integrals(mesh: Mesh, problem, solution: SolutionPair, formulation: str,
                       quad_degree: int, exact: bool,
                       flux_weight: str = FLUX_WEIGHT_IDENTITY) -> Dict[str, np.ndarray]:
    """
    Per-element squared integrals, chunked over elements.

    Always: "pde" = ||f + A:grad sigma_h||^2, "flux" = ||M^{1/2}(sigma_h - grad u_h)||^2.
    With exact=True additionally the exact-error pieces.
    """
    rule = rule_for_degree(quad_degree)
    u_map, s_map = solution.u_map, solution.sigma_map
    tab_u = u_map.basis.tabulate(rule.points)
    tab_s = s_map.basis.tabulate(rule.points)

    keys = ["pde", "flux"]
    if exact:
        keys += ["ls_pde", "ls_flux", "l2u", "h1u", "l2sigma", "h2A", "h2"]
    out = {key: np.empty(mesh.n_triangles) for key in keys}

    for start in range(0, mesh.n_triangles, ASSEMBLY_CHUNK):
        elements = np.arange(start, min(start + ASSEMBLY_CHUNK, mesh.n_triangles))
        emap = element_maps(mesh, elements)
        xq = emap.to_physical(rule.points)
        x, y = xq[..., 0], xq[..., 1]
        wq = np.abs(emap.det)[:, None] * rule.weights[None, :]

        def integral(values):
            return (values * wq).sum(axis=1)

        uh, grad_uh, hess_uh = evaluate(u_map, solution.u_coeffs, tab_u, emap, elements)
        s1, grad_s1, _ = evaluate(s_map, solution.sigma_coeffs[0], tab_s, emap, elements)
        s2, grad_s2, _ = evaluate(s_map, solution.sigma_coeffs[1], tab_s, emap, elements)
        sigma_h = np.stack((s1, s2), axis=-1)
        grad_sigma_h = np.stack((grad_s1, grad_s2), axis=-2)         # [..., i, j] = d_j sigma_i

        coeff = problem.coefficient(x, y)
        f = np.broadcast_to(problem.f(x, y), x.shape)
        a_div_h = _frobenius(coeff, grad_sigma_h)
        flux_h = sigma_h - grad_uh

        sel = slice(start, start + len(elements))
        out["pde"][sel] = integral((f + a_div_h) ** 2)
        out["flux"][sel] = integral(_weighted_square(flux_h, coeff, flux_weight))

        if exact:
            u = problem.exact.u(x, y)
            grad_u = problem.exact.grad_u(x, y)
            hess_u = problem.exact.hess_u(x, y)
            a_hess = _frobenius(coeff, hess_u)
            e_sigma = grad_u - sigma_h
            e_grad = grad_u - grad_uh
            e_hess = hess_u - hess_uh
            out["ls_pde"][sel] = integral((a_hess - a_div_h) ** 2)
            out["ls_flux"][sel] = integral(_weighted_square(e_sigma - e_grad, coeff, flux_weight))
            out["l2u"][sel] = integral((u - uh) ** 2)
            out["h1u"][sel] = integral((e_grad ** 2).sum(axis=-1))
            out["l2sigma"][sel] = integral((e_sigma ** 2).sum(axis=-1))
            out["h2A"][sel] = integral(_frobenius(coeff, e_hess) ** 2)
            out["h2"][sel] = integral(_frobenius(e_hess, e_hess))
    return out


def indicators(mesh: Mesh, problem, solution: SolutionPair, formulation: str,
               quad_degree: Optional[int] = None,
               flux_weight: str = FLUX_WEIGHT_IDENTITY) -> ElementIndicator:
    if quad_degree is None:
        quad_degree = norm_quad_degree(solution.u_map.degree)
    parts = _element_integrals(mesh, problem, solution, formulation, quad_degree, exact=False,
                               flux_weight=flux_weight)
    w = element_weights(mesh, formulation)
    eta2 = w * parts["pde"] + parts["flux"]
    eta2.flags.writeable = False
    return ElementIndicator(eta2, formulation)


def functional(mesh: Mesh, problem, solution: SolutionPair, formulation: str,
               quad_degree: Optional[int] = None,
               flux_weight: str = FLUX_WEIGHT_IDENTITY) -> float:
    """Least-squares functional J(u_h, sigma_h; f), weighted or not."""
    return float(indicators(mesh, problem, solution, formulation, quad_degree, flux_weight).eta_squared.sum())


def error_norms(
    mesh: Mesh,
    problem,
    solution: SolutionPair,
    formulation: str,
    degree: int,
    level: int = 0,
    indicator: Optional[ElementIndicator] = None,
    flux_weight: str = FLUX_WEIGHT_IDENTITY,
) -> ErrorReport:
    """
    Exact-error norms against the problem's exact bundle.

    The broken H^2 quantities wbh2A and wbh2 are nan for k = 1. eta is
    taken from `indicator` when given, otherwise computed here with the
    same rule.
    """
    quad_degree = norm_quad_degree(degree)
    parts = _element_integrals(mesh, problem, solution, formulation, quad_degree, exact=True,
                               flux_weight=flux_weight)
    w = element_weights(mesh, formulation)
    h2 = mesh.diameters ** 2

    local_ls = w * parts["ls_pde"] + parts["ls_flux"]
    if indicator is None:
        eta = float(np.sqrt((w * parts["pde"] + parts["flux"]).sum()))
    else:
        eta = indicator.eta

    if degree >= 2:
        wbh2A = float(np.sqrt((h2 * parts["h2A"]).sum()))
        wbh2 = float(np.sqrt((h2 * parts["h2"]).sum()))
    else:
        wbh2A = wbh2 = float("nan")

    u_map, s_map = solution.u_map, solution.sigma_map
    free_dofs = u_map.total_dofs - len(u_map.boundary_dofs) + 2 * s_map.total_dofs
    report = ErrorReport(
        ls=float(np.sqrt(local_ls.sum())),
        l2u=float(np.sqrt(parts["l2u"].sum())),
        h1u=float(np.sqrt(parts["h1u"].sum())),
        l2sigma=float(np.sqrt(parts["l2sigma"].sum())),
        wbh2A=wbh2A,
        wbh2=wbh2,
        eta=eta,
        dofs=int(free_dofs),
        level=level,
        nodes=int(u_map.total_dofs),
        hmax=float(mesh.h_max),
        local_ls=local_ls,
    )
    logger.debug("level %d: ls=%.6e eta=%.6e l2u=%.6e h1u=%.6e", level, report.ls, eta, report.l2u, report.h1u)
    return report
