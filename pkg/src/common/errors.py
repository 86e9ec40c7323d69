# error types shared by the solver library and the benchmark CLI


class ConfigError(ValueError):
    """Invalid run configuration (CLI exit code 2)."""


class DomainError(ValueError):
    """A coefficient or exact field was evaluated outside its domain."""


class RefinementError(RuntimeError):
    """Bisection closure did not settle; refinement-edge labels are inconsistent."""


class SolverError(RuntimeError):
    """Iterative solve failed to reach the requested tolerance."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (relative residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations
