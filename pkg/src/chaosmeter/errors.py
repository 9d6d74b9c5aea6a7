"""Exception types raised by chaosmeter."""


class ChaosmeterError(Exception):
    """Base class for all package errors."""


class DomainError(ChaosmeterError, ValueError):
    """Input outside the mathematical domain of an operation."""


class PreconditionError(ChaosmeterError, ValueError):
    """A structural precondition (commutation, sizes, ...) does not hold."""


class HypothesisError(ChaosmeterError, ValueError):
    """A theoretical bound was requested outside the regime where it applies."""


class CapacityError(ChaosmeterError, ValueError):
    """Problem too large for an exact method."""


class NonConvergenceError(ChaosmeterError, RuntimeError):
    """Fixed-point iteration diverged; ``last`` holds the final iterate."""

    def __init__(self, message, last=None, iterations=None, residual=None):
        super().__init__(message)
        self.last = last
        self.iterations = iterations
        self.residual = residual


class DivergenceError(ChaosmeterError, RuntimeError):
    """Sampler state became non-finite at ``iteration``."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration
