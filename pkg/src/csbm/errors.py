"""Exception types shared across the package."""


class CsbmError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(CsbmError, ValueError):
    """An argument violates a precondition (wrong size, range, or type)."""


class DomainError(CsbmError, ValueError):
    """A numeric routine was called at or too close to a singular configuration."""


class GraphParseError(CsbmError, ValueError):
    """A graph or label file is malformed.

    Carries the 1-based line number of the offending record when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConvergenceError(CsbmError, RuntimeError):
    """The iterative eigensolver failed to reach the requested tolerance.

    ``best_residual`` holds the smallest residual norm seen before giving up.
    """

    def __init__(self, message: str, best_residual: float = float("inf")):
        self.best_residual = best_residual
        super().__init__(message)


class EstimationError(CsbmError, RuntimeError):
    """Moment-based parameter estimation has no admissible solution."""
