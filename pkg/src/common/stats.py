# Track and report run statistics
# Metrics: levels, assemblies, solves, CG iterations, per-stage wall time
# printed at the end of a benchmark run

import threading
import time
from contextlib import contextmanager


class RunStats:
    """
    Thread-safe statistics tracker for a convergence study

    Tracks:
    - levels completed, assemblies, direct and CG solves
    - CG iterations
    - wall time spent per stage (assemble / solve / estimate)

    Thread-safety: all methods take the lock, so stage timers may be
    updated from worker threads that assemble or estimate concurrently.
    """

    STAGES = ("assemble", "solve", "estimate", "refine")

    def __init__(self):
        self.lock = threading.Lock()

        self.levels = 0
        self.assemblies = 0
        self.direct_solves = 0
        self.cg_solves = 0
        self.cg_iterations = 0
        self.max_dofs = 0

        self.stage_seconds = {stage: 0.0 for stage in self.STAGES}

        self.start_time = None
        self.end_time = None

    def record_level(self, dofs: int):
        with self.lock:
            self.levels += 1
            self.max_dofs = max(self.max_dofs, dofs)

    def record_assembly(self):
        with self.lock:
            self.assemblies += 1

    def record_solve(self, method: str, iterations: int = 0):
        """
        Record a linear solve

        Args:
            method: "direct" or "cg"
            iterations: CG iterations (ignored for direct solves)
        """
        with self.lock:
            if method == "cg":
                self.cg_solves += 1
                self.cg_iterations += iterations
            else:
                self.direct_solves += 1

    def add_time(self, stage: str, seconds: float):
        if stage not in self.stage_seconds:
            raise ValueError(f"unknown stage {stage!r}")
        with self.lock:
            self.stage_seconds[stage] += seconds

    @contextmanager
    def timed(self, stage: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.add_time(stage, time.perf_counter() - t0)

    def start_run(self):
        with self.lock:
            self.start_time = time.time()

    def end_run(self):
        with self.lock:
            self.end_time = time.time()

    def get_duration(self) -> float:
        with self.lock:
            if self.start_time is None or self.end_time is None:
                return 0.0
            return self.end_time - self.start_time

    def get_report(self) -> dict:
        """
        Generate complete statistics report

        Returns:
            {
                'levels': int, 'assemblies': int,
                'direct_solves': int, 'cg_solves': int, 'cg_iterations': int,
                'mean_cg_iterations': float, 'max_dofs': int,
                'assemble_seconds': float, ..., 'duration_seconds': float
            }
        """
        with self.lock:
            duration = 0.0
            if self.start_time is not None and self.end_time is not None:
                duration = self.end_time - self.start_time

            mean_iterations = 0.0
            if self.cg_solves > 0:
                mean_iterations = self.cg_iterations / self.cg_solves

            report = {
                'levels': self.levels,
                'assemblies': self.assemblies,
                'direct_solves': self.direct_solves,
                'cg_solves': self.cg_solves,
                'cg_iterations': self.cg_iterations,
                'mean_cg_iterations': mean_iterations,
                'max_dofs': self.max_dofs,
                'duration_seconds': duration,
            }
            for stage, seconds in self.stage_seconds.items():
                report[f'{stage}_seconds'] = seconds
            return report

    def print_report(self):
        """
        Print formatted statistics report to console

        Example output:
        ========================================
                    Run Statistics
        ========================================
        Levels:               6
        Max free DOFs:        24833
        Direct / CG solves:   5 / 1 (212.0 it/solve)
        Assemble:             1.42 seconds
        ...
        ========================================
        """
        report = self.get_report()

        print("=" * 40)
        print("Run Statistics".center(40))
        print("=" * 40)
        print(f"Levels:               {report['levels']}")
        print(f"Max free DOFs:        {report['max_dofs']}")
        print(f"Direct / CG solves:   {report['direct_solves']} / {report['cg_solves']} "
              f"({report['mean_cg_iterations']:.1f} it/solve)")
        for stage in self.STAGES:
            print(f"{stage.capitalize() + ':':<22}{report[stage + '_seconds']:.2f} seconds")
        print(f"Duration:             {report['duration_seconds']:.2f} seconds")
        print("=" * 40)
