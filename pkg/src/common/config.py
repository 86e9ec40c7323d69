# Runtime config for solver runs and benchmark studies
# defaults come from common.constants; the CLI layers a JSON config file and
# explicit flags on top (flags win)
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, asdict
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

from common.constants import (
    DEFAULT_TOL, DEFAULT_MAX_ITER, DIRECT_THRESHOLD, DEFAULT_CHECK_SAMPLES, SOLVER_AUTO, SOLVER_METHODS,
    FLUX_WEIGHT_IDENTITY, FLUX_WEIGHTS,
    DEFAULT_THETA, DEFAULT_ADAPT_LEVELS, DEFAULT_MAX_DOFS,
    DEFAULT_LEVELS, DEFAULT_START_LEVEL, DEGREES, FORMULATIONS, MODES,
    MODE_UNIFORM,
)
from common.errors import ConfigError


@dataclass
class SolverConfig:
    method: str = SOLVER_AUTO
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    direct_threshold: int = DIRECT_THRESHOLD
    check_samples: int = DEFAULT_CHECK_SAMPLES     # random minimality checks per solve

    def validate(self) -> None:
        if self.method not in SOLVER_METHODS:
            raise ConfigError(f"unknown solver method {self.method!r}, expected one of {SOLVER_METHODS}")
        if not self.tol > 0:
            raise ConfigError(f"solver tolerance must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.direct_threshold < 0:
            raise ConfigError(f"direct_threshold must be >= 0, got {self.direct_threshold}")
        if self.check_samples < 0:
            raise ConfigError(f"check_samples must be >= 0, got {self.check_samples}")


@dataclass
class AdaptConfig:
    theta: float = DEFAULT_THETA
    max_levels: int = DEFAULT_ADAPT_LEVELS
    max_dofs: int = DEFAULT_MAX_DOFS
    stop_eta: float = 0.0
    stop_h1: Optional[float] = None     # stop once ||grad(u - u_h)||_0 <= stop_h1

    def validate(self) -> None:
        if not 0.0 < self.theta <= 1.0:
            raise ConfigError(f"theta must lie in (0, 1], got {self.theta}")
        if self.max_levels < 1:
            raise ConfigError(f"max_levels must be >= 1, got {self.max_levels}")
        if self.max_dofs < 1:
            raise ConfigError(f"max_dofs must be >= 1, got {self.max_dofs}")
        if self.stop_eta < 0:
            raise ConfigError(f"stop_eta must be >= 0, got {self.stop_eta}")
        if self.stop_h1 is not None and self.stop_h1 <= 0:
            raise ConfigError(f"stop_h1 must be positive, got {self.stop_h1}")


@dataclass
class RunConfig:
    benchmark: str = "smooth-a1"
    formulation: str = "l2"
    degree: int = 1
    flux_weight: str = FLUX_WEIGHT_IDENTITY
    mode: str = MODE_UNIFORM
    levels: int = DEFAULT_LEVELS
    start_level: int = DEFAULT_START_LEVEL
    theta: float = DEFAULT_THETA
    max_dofs: int = DEFAULT_MAX_DOFS
    stop_h1: Optional[float] = None
    rate_window: Optional[int] = None
    solver: SolverConfig = field(default_factory=SolverConfig)
    out_csv: Optional[str] = None
    out_svg: Optional[str] = None
    out_mesh: Optional[str] = None
    out_mesh_svg: Optional[str] = None
    seed: int = 0
    verbose: bool = False

    def validate(self, benchmarks: Optional[Iterable[str]] = None) -> None:
        if benchmarks is not None and self.benchmark not in set(benchmarks):
            raise ConfigError(f"unknown benchmark {self.benchmark!r}")
        check_method(self.formulation, self.degree)
        check_flux_weight(self.flux_weight)
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}, expected one of {MODES}")
        if self.levels < 1:
            raise ConfigError(f"levels must be >= 1, got {self.levels}")
        if self.start_level < 0:
            raise ConfigError(f"start_level must be >= 0, got {self.start_level}")
        if self.rate_window is not None and self.rate_window < 2:
            raise ConfigError(f"rate_window must be >= 2, got {self.rate_window}")
        self.adapt_config().validate()
        self.solver.validate()

    def adapt_config(self) -> AdaptConfig:
        return AdaptConfig(
            theta=self.theta,
            max_levels=self.levels,
            max_dofs=self.max_dofs,
            stop_h1=self.stop_h1,
        )

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def check_method(formulation: str, degree: int) -> None:
    """Reject (formulation, degree) pairs outside l2/k=1 and weighted/k in {2,3}."""
    if formulation not in FORMULATIONS:
        raise ConfigError(f"unknown formulation {formulation!r}, expected one of {FORMULATIONS}")
    if degree not in DEGREES[formulation]:
        raise ConfigError(
            f"formulation {formulation!r} requires degree in {DEGREES[formulation]}, got {degree}"
        )


def check_flux_weight(flux_weight: str) -> None:
    if flux_weight not in FLUX_WEIGHTS:
        raise ConfigError(f"unknown flux weight {flux_weight!r}, expected one of {FLUX_WEIGHTS}")


_SOLVER_KEYS = {f.name for f in fields(SolverConfig)}
_RUN_KEYS = {f.name for f in fields(RunConfig)} - {"solver"}


def load_config_file(path: str | Path) -> Dict[str, Any]:
    """
    Read a JSON config file into a flat dict of RunConfig/SolverConfig fields.

    Solver keys may be given flat ("tol": 1e-12) or nested ("solver": {...}).
    """
    with open(path, "r", encoding="utf-8") as fp:
        try:
            raw = json.load(fp)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc

    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")

    flat: Dict[str, Any] = {}
    for key, value in raw.items():
        if key == "solver":
            if not isinstance(value, dict):
                raise ConfigError("config key 'solver' must be an object")
            for skey, svalue in value.items():
                if skey not in _SOLVER_KEYS:
                    raise ConfigError(f"unknown solver config key {skey!r}")
                flat[skey] = svalue
        elif key in _RUN_KEYS or key in _SOLVER_KEYS:
            flat[key] = value
        else:
            raise ConfigError(f"unknown config key {key!r}")
    return flat


def build_run_config(values: Dict[str, Any]) -> RunConfig:
    """Split a flat dict into RunConfig + SolverConfig."""
    solver = SolverConfig(**{k: v for k, v in values.items() if k in _SOLVER_KEYS})
    run = RunConfig(**{k: v for k, v in values.items() if k in _RUN_KEYS}, solver=solver)
    return run
