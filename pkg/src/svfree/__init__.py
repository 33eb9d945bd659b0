"""Lagrangian solver for the 1D vacuum free-boundary viscous shallow-water system.

Subpackages follow the pipeline: profiles and weighted quadrature, weighted
norms and inequality checks, the spectral Galerkin linearized solver, initial
jets and energy monitoring, the fixed-point nonlinear solve with an
independent finite-difference oracle, Eulerian reconstruction, and the CLI.
"""

from . import (
    cli,
    eulerian,
    fd_oracle,
    galerkin,
    jet,
    picard,
    profile,
    weighted_calculus,
)
from .errors import (
    ConfigurationError,
    DegenerateMassError,
    FlowMapDegeneracyError,
    InequalityViolationError,
    NonConvergenceError,
    SvfreeError,
    TimeWindowError,
    UnsupportedOperationError,
    ValidationError,
)

__version__ = "0.1.0"

__all__ = [
    "profile",
    "weighted_calculus",
    "galerkin",
    "jet",
    "picard",
    "fd_oracle",
    "eulerian",
    "cli",
    "SvfreeError",
    "ConfigurationError",
    "ValidationError",
    "FlowMapDegeneracyError",
    "DegenerateMassError",
    "NonConvergenceError",
    "TimeWindowError",
    "InequalityViolationError",
    "UnsupportedOperationError",
    "__version__",
]
