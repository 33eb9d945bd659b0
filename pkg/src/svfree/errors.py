"""Exception hierarchy shared by all solver and diagnostic modules."""


class SvfreeError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SvfreeError):
    """Bad run configuration (grid sizes, step counts, malformed config files)."""


class ValidationError(SvfreeError):
    """Input data violating a physical admissibility condition."""


class FlowMapDegeneracyError(SvfreeError):
    """Flow-map Jacobian left the admissible range; the Lagrangian map folded."""


class DegenerateMassError(SvfreeError):
    """Weighted mass matrix failed to factor; signals a profile bug."""


class NonConvergenceError(SvfreeError):
    """Fixed-point iteration exhausted its budget.

    Carries the per-iteration contraction history so a failed solve is still
    a usable diagnostic result.
    """

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class TimeWindowError(SvfreeError):
    """Flow-map bound failed on the accepted trajectory: the time window is
    too large for the contraction regime. Retry with smaller t_final."""


class InequalityViolationError(SvfreeError):
    """A weighted inequality check met a vanishing majorant with nonzero
    minorant; cannot occur for admissible profiles."""


class UnsupportedOperationError(SvfreeError):
    """Operation not available for this trajectory or field representation."""
