"""
Dorfler marking and the adaptive solve -> estimate -> mark -> refine loop.
"""
from __future__ import annotations

import logging
from typing import Iterator, List, Optional, Tuple, Union

import numpy as np

from common.config import AdaptConfig, SolverConfig
from common.constants import FLUX_WEIGHT_IDENTITY
from common.stats import RunStats
from fem.assembly import SolutionPair, assemble
from fem.estimate import ElementIndicator, ErrorReport, error_norms, indicators
from fem.mesh import Mesh, bisect, make_initial_mesh, uniform_refine
from fem.solver import solve_ls

logger = logging.getLogger(__name__)

# round-off slack on the bulk criterion so theta * total is reachable
_BULK_SLACK = 1e-14


def dorfler_mark(indicator: Union[ElementIndicator, np.ndarray], theta: float) -> np.ndarray:
    """
    Minimal set of triangles carrying a theta fraction of sum eta_K^2.

    Greedy by descending eta_K^2, ties broken by the lower index. Returns
    sorted triangle indices. theta >= 1 marks every triangle with eta_K > 0.
    """
    if not theta > 0:
        raise ValueError(f"theta must be positive, got {theta}")
    eta2 = indicator.eta_squared if isinstance(indicator, ElementIndicator) else np.asarray(indicator, float)
    total = float(eta2.sum())
    if total <= 0.0:
        return np.zeros(0, dtype=np.int64)
    if theta >= 1.0:
        return np.flatnonzero(eta2 > 0)

    order = np.argsort(-eta2, kind="stable")
    running = np.cumsum(eta2[order])
    count = int(np.searchsorted(running, theta * total * (1.0 - _BULK_SLACK), side="left")) + 1
    return np.sort(order[:min(count, len(order))])


def _stop_reason(report: ErrorReport, config: AdaptConfig) -> Optional[str]:
    if report.eta <= config.stop_eta:
        return f"eta {report.eta:.3e} <= {config.stop_eta:.3e}"
    if config.stop_h1 is not None and report.h1u <= config.stop_h1:
        return f"h1u {report.h1u:.3e} <= {config.stop_h1:.3e}"
    return None


def iter_adaptive(
    problem,
    formulation: str,
    degree: int,
    config: AdaptConfig,
    solver_cfg: Optional[SolverConfig] = None,
    stats: Optional[RunStats] = None,
    initial_mesh: Optional[Mesh] = None,
    start_level: int = 0,
    flux_weight: str = FLUX_WEIGHT_IDENTITY,
    rng: Optional[np.random.Generator] = None,
) -> Iterator[Tuple[Mesh, SolutionPair, ErrorReport]]:
    """
    Yield (mesh, solution, report) for every level of the adaptive loop.

    The first level is the initial mesh of the problem's domain after
    `start_level` uniform refinements. Stops on max_levels, on max_dofs
    (checked after assembly; a level over the budget is not solved),
    on stop_eta or on stop_h1. flux_weight selects the first-order residual
    weight for assembly and estimation alike; rng feeds the solver's
    optional minimality check.
    """
    config.validate()
    stats = stats or RunStats()
    mesh = initial_mesh if initial_mesh is not None else make_initial_mesh(problem.domain_id)
    for _ in range(start_level):
        mesh = uniform_refine(mesh)

    for level in range(start_level, start_level + config.max_levels):
        with stats.timed("assemble"):
            system = assemble(mesh, problem, formulation, degree, stats=stats, flux_weight=flux_weight)
        if level > start_level and system.n_free > config.max_dofs:
            logger.info("stopping: %d free DOFs exceed max_dofs=%d", system.n_free, config.max_dofs)
            return

        with stats.timed("solve"):
            solution = solve_ls(system, solver_cfg, stats=stats, rng=rng)
        with stats.timed("estimate"):
            indicator = indicators(mesh, problem, solution, formulation, flux_weight=flux_weight)
            report = error_norms(mesh, problem, solution, formulation, degree, level=level,
                                 indicator=indicator, flux_weight=flux_weight)
        stats.record_level(report.dofs)
        logger.info(
            "level %d: %d triangles, %d DOFs, eta=%.4e, ls=%.4e",
            level, mesh.n_triangles, report.dofs, report.eta, report.ls,
        )
        yield mesh, solution, report

        reason = _stop_reason(report, config)
        if reason is not None:
            logger.info("stopping: %s", reason)
            return

        with stats.timed("refine"):
            mesh = bisect(mesh, dorfler_mark(indicator, config.theta))


def adaptive_loop(
    problem,
    formulation: str,
    degree: int,
    config: AdaptConfig,
    solver_cfg: Optional[SolverConfig] = None,
    stats: Optional[RunStats] = None,
    start_level: int = 0,
    flux_weight: str = FLUX_WEIGHT_IDENTITY,
) -> List[ErrorReport]:
    return [report for _, _, report in iter_adaptive(
        problem, formulation, degree, config, solver_cfg, stats, start_level=start_level, flux_weight=flux_weight,
    )]
