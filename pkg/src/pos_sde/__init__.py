"""Parallel optimized sampling for stochastic differential equations."""

from .errors import (
    Divergence,
    InvalidDiffusion,
    InvalidInput,
    NonConvergence,
    NumericError,
    PosError,
    SingularGram,
)
from .observables import MonomialObservables, cross_moment_observables, power_observables
from .static import AttemptReport, OptimizerConfig, jacobian, optimize_initial

__all__ = [
    "AttemptReport",
    "Divergence",
    "InvalidDiffusion",
    "InvalidInput",
    "MonomialObservables",
    "NonConvergence",
    "NumericError",
    "OptimizerConfig",
    "PosError",
    "SingularGram",
    "cross_moment_observables",
    "jacobian",
    "optimize_initial",
    "power_observables",
]
