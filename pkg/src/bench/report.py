"""
Convergence table (CSV) and plots (SVG) for a finished study.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.collections import PolyCollection  # noqa: E402

from bench.rates import rate_rows  # noqa: E402
from common.constants import CSV_HEADER, MODE_ADAPTIVE, NORM_COLUMNS  # noqa: E402
from common.records import encode_header, encode_row  # noqa: E402
from fem.estimate import ErrorReport  # noqa: E402
from fem.mesh import Mesh  # noqa: E402

logger = logging.getLogger(__name__)

# fixed SVG ids and no timestamp, so identical studies give identical files
_SVG_RC = {"svg.hashsalt": "lsfem", "svg.fonttype": "path"}
_SVG_METADATA = {"Date": None}


@dataclass
class RunReport:
    benchmark: str
    formulation: str
    degree: int
    mode: str
    rows: List[Dict[str, float]] = field(default_factory=list)

    @classmethod
    def from_reports(cls, benchmark: str, formulation: str, degree: int, mode: str,
                     reports: List[ErrorReport], window: Optional[int] = None) -> "RunReport":
        rows = [r.as_row() for r in reports]
        for row, rates in zip(rows, rate_rows(rows, mode, window)):
            row.update(rates)
        return cls(benchmark, formulation, degree, mode, rows)

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> List[float]:
        return [row[name] for row in self.rows]

    @property
    def label(self) -> str:
        return f"{self.benchmark} {self.formulation} k={self.degree} ({self.mode})"


def write_csv(report: RunReport, path: str | Path) -> None:
    lines = [encode_header(CSV_HEADER)] + [encode_row(row, CSV_HEADER) for row in report.rows]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info("wrote %d rows to %s", len(report.rows), path)


def write_svg(report: RunReport, path: str | Path) -> None:
    """Log-log chart of every available norm vs h (uniform) or DOFs (adaptive)."""
    adaptive = report.mode == MODE_ADAPTIVE
    xkey = "dofs" if adaptive else "hmax"
    xs = report.column(xkey)

    with plt.rc_context(_SVG_RC):
        fig, ax = plt.subplots(figsize=(6.4, 4.8))
        for name in ("eta",) + NORM_COLUMNS:
            pts = [(x, y) for x, y in zip(xs, report.column(name)) if math.isfinite(y) and y > 0]
            if len(pts) < 1:
                continue
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=name)
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("free DOFs" if adaptive else "h")
        ax.set_ylabel("error")
        if not adaptive:
            ax.invert_xaxis()
        ax.set_title(report.label)
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
        fig.savefig(path, format="svg", metadata=_SVG_METADATA)
        plt.close(fig)
    logger.info("wrote convergence plot to %s", path)


def plot_mesh(mesh: Mesh, path: str | Path, title: Optional[str] = None) -> None:
    with plt.rc_context(_SVG_RC):
        fig, ax = plt.subplots(figsize=(6.0, 6.0))
        polys = PolyCollection(mesh.vertices[mesh.triangles], facecolors="none",
                               edgecolors="black", linewidths=0.3)
        ax.add_collection(polys)
        ax.autoscale_view()
        ax.set_aspect("equal")
        ax.set_title(title or f"{mesh.n_triangles} triangles, {mesh.n_vertices} vertices")
        fig.savefig(path, format="svg", metadata=_SVG_METADATA)
        plt.close(fig)
    logger.info("wrote mesh plot to %s", path)
