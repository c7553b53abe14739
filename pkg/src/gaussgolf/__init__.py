"""Gaussian modeling and Monte Carlo analysis of stroke-play golf scores."""

__version__ = "0.1.0"

from gaussgolf.errors import (
    DataError,
    DomainError,
    GaussGolfError,
    InsufficientDataError,
    ValidationError,
)

__all__ = [
    "__version__",
    "DataError",
    "DomainError",
    "GaussGolfError",
    "InsufficientDataError",
    "ValidationError",
]
