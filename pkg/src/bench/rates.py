# Convergence rate fitting for uniform (vs h) and adaptive (vs DOFs) studies
# rate per row uses the window of levels ending at that row; first row has none

import math
from typing import Dict, List, Optional, Sequence

import numpy as np

from common.constants import (
    ADAPTIVE_RATE_WINDOW, MODE_ADAPTIVE, MODE_UNIFORM, NORM_COLUMNS, UNIFORM_RATE_WINDOW,
)


def default_window(mode: str) -> int:
    return ADAPTIVE_RATE_WINDOW if mode == MODE_ADAPTIVE else UNIFORM_RATE_WINDOW


def fit_rate(values: Sequence[float], scale: Sequence[float], mode: str = MODE_UNIFORM,
             window: Optional[int] = None) -> float:
    """
    Observed convergence order over the last `window` levels.

    Algorithm:
    1. keep the last `window` (value, scale) pairs, all of them if fewer
    2. uniform: mean over consecutive pairs of log(e_{i-1}/e_i) / log(h_{i-1}/h_i)
    3. adaptive: least-squares slope of log e against log N, sign flipped
       so that e ~ N^{-r} reports r > 0

    Raises ValueError for fewer than two levels or non-positive inputs.
    """
    e = np.asarray(values, dtype=float)
    s = np.asarray(scale, dtype=float)
    if e.shape != s.shape or e.ndim != 1:
        raise ValueError("values and scale must be 1-D sequences of equal length")
    if window is None:
        window = default_window(mode)
    e, s = e[-window:], s[-window:]
    if len(e) < 2:
        raise ValueError(f"need at least two levels to fit a rate, got {len(e)}")
    if not (np.all(e > 0) and np.all(s > 0)):
        raise ValueError("rate fitting needs positive errors and scales")

    le, ls = np.log(e), np.log(s)
    if mode == MODE_UNIFORM:
        return float(np.mean(-np.diff(le) / -np.diff(ls)))
    if mode == MODE_ADAPTIVE:
        slope, _ = np.polyfit(ls, le, 1)
        return float(-slope)
    raise ValueError(f"unknown mode {mode!r}")


def rate_rows(rows: List[Dict[str, float]], mode: str, window: Optional[int] = None) -> List[Dict[str, float]]:
    """
    rate_<norm> columns for every row: fitted on the window ending at that row.

    The scale is hmax for uniform studies and dofs for adaptive ones. A
    rate is nan on the first row and wherever a value in the window is
    missing (nan) or not positive.
    """
    key = "dofs" if mode == MODE_ADAPTIVE else "hmax"
    if window is None:
        window = default_window(mode)

    out = []
    for i in range(len(rows)):
        lo = max(0, i + 1 - window)
        rates = {}
        for name in NORM_COLUMNS:
            values = [rows[j][name] for j in range(lo, i + 1)]
            scale = [rows[j][key] for j in range(lo, i + 1)]
            rate = math.nan
            if i > 0 and all(math.isfinite(v) and v > 0 for v in values):
                rate = fit_rate(values, scale, mode, window)
            rates[f"rate_{name}"] = rate
        out.append(rates)
    return out
