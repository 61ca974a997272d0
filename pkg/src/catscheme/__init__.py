"""Catastrophe loss assessment, indifference pricing and solvency-bound scheme design."""

from .errors import ConsistencyError, DomainError, FitError, InputError, NumericError

__version__ = "0.1.0"

__all__ = [
    "ConsistencyError",
    "DomainError",
    "FitError",
    "InputError",
    "NumericError",
    "__version__",
]
