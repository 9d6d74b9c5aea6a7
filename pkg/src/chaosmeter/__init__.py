"""Numerical checks of local chaos rates for mean-field Gibbs measures."""

from . import bounds, gaussian, meanfield, metrics, model, sampler
from .errors import (
    CapacityError,
    ChaosmeterError,
    DivergenceError,
    DomainError,
    HypothesisError,
    NonConvergenceError,
    PreconditionError,
)
from .model import ModelSpec

__version__ = "0.1.0"

__all__ = [
    "bounds",
    "gaussian",
    "meanfield",
    "metrics",
    "model",
    "sampler",
    "ModelSpec",
    "ChaosmeterError",
    "DomainError",
    "PreconditionError",
    "HypothesisError",
    "CapacityError",
    "NonConvergenceError",
    "DivergenceError",
    "__version__",
]
