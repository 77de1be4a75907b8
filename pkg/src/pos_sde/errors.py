"""Exception hierarchy shared by the solvers and the benchmark harness."""

from __future__ import annotations


class PosError(Exception):
    """Base class. ``step`` is set when the failure happened inside ``integrate``."""

    step: int | None = None


class InvalidInput(PosError, ValueError):
    pass


class NumericError(PosError, ArithmeticError):
    pass


class SingularGram(NumericError):
    """The M x M normal-equation matrix could not be inverted reliably."""

    def __init__(self, message: str, rcond: float):
        super().__init__(f"{message} (rcond={rcond:.3e})")
        self.rcond = rcond


class InvalidDiffusion(NumericError):
    pass


class OptimizationFailure(NumericError):
    """Raised when a Newton projection does not reach its targets.

    The partially optimized ensemble and the attempt report are attached so
    that callers (e.g. benchmarks) can still record the attempt.
    """

    def __init__(self, message: str, ensemble=None, report=None):
        super().__init__(message)
        self.ensemble = ensemble
        self.report = report


class NonConvergence(OptimizationFailure):
    pass


class Divergence(OptimizationFailure):
    pass


class ConfigError(InvalidInput):
    """Rejected benchmark configuration or malformed benchmark CSV."""
