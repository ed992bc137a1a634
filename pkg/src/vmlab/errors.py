"""Exception types shared across the package."""


class VmlabError(Exception):
    """Base class for all vmlab errors."""


class InvalidSpecError(VmlabError):
    """Quadratic specification is not symmetric positive definite."""


class NonConvexRegionError(VmlabError):
    """Every sampled Hessian was indefinite; no convexity modulus exists."""


class UnsupportedDerivativeError(VmlabError):
    """Derivative order not available for this schedule family."""


class DegenerateScheduleError(VmlabError):
    """Schedule hit the positivity floor on the check grid."""


class SingularSystemError(VmlabError):
    """A shifted-Hessian linear system could not be solved reliably."""

    def __init__(self, message, step_index=None, time=None):
        super().__init__(message)
        self.step_index = step_index
        self.time = time


class DivergenceError(VmlabError):
    """Integration produced a non-finite state."""

    def __init__(self, message, last_valid_index):
        super().__init__(message)
        self.last_valid_index = last_valid_index


class InvalidModulusError(VmlabError):
    """Strong-convexity modulus must be positive."""


class AssumptionViolatedError(VmlabError):
    """A precondition certified by an assumption check failed numerically."""


class DegenerateFitError(VmlabError):
    """Constant fit impossible because the shape series vanishes."""


class AlignmentError(VmlabError):
    """Two series do not share the same time grid."""


class DegenerateBasisError(VmlabError):
    """The collocation system for the basis coefficients is singular."""


class SeriesUnderflowError(VmlabError):
    """Series underflowed to zero on every candidate fit window."""


class ConfigError(VmlabError):
    """Experiment configuration file is invalid."""

    def __init__(self, message, context=None):
        if context:
            message = f"{message} (at {context})"
        super().__init__(message)
        self.context = context


class IntegrabilityWarning(UserWarning):
    """Numeric tail estimation did not converge geometrically."""
