"""Exception hierarchy.

The CLI maps these onto exit codes: ``ValidationError`` -> 2,
``DomainError`` -> 3. I/O failures surface as ``OSError`` (exit 1).
"""


class GaussGolfError(Exception):
    """Base class for all package errors."""


class ValidationError(GaussGolfError, ValueError):
    """Input failed a precondition or schema check."""


class InsufficientDataError(ValidationError):
    """Too few observations for the requested statistic."""

    def __init__(self, message: str = "insufficient data"):
        super().__init__(message)


class DataError(ValidationError):
    """Malformed or inconsistent record in an input file."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DomainError(GaussGolfError, ArithmeticError):
    """Numerically degenerate input (zero spread, singular fit, ...)."""
