"""Exception types shared across the package."""


class NonlocalError(Exception):
    """Base class for all package errors."""


class KernelDomainError(NonlocalError, ValueError):
    """A kernel function was evaluated outside its domain (e.g. r < 0)."""


class SingularityError(NonlocalError, ValueError):
    """The singular kernel was evaluated at r = 0."""


class QuadratureError(NonlocalError, RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class ConfigurationError(NonlocalError, ValueError):
    """Invalid or inconsistent configuration (grid, kernel, quadrature, config file)."""


class SolverError(NonlocalError, RuntimeError):
    """An iterative solve did not converge."""

    def __init__(self, message, residual_history=None, stage=None):
        super().__init__(message)
        self.residual_history = list(residual_history or [])
        self.stage = stage
