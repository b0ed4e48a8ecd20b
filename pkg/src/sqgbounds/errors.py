"""Exception hierarchy shared across the package."""


class SqgError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SqgError):
    """Invalid sizes, ranges, or non-grid-commensurate parameters."""


class DomainError(SqgError):
    """Argument outside the mathematical domain of an operator (e.g. t < 0)."""


class PreconditionError(SqgError):
    """A documented precondition of an operation was violated."""


class NumericError(SqgError):
    """Non-finite data or a quadrature that failed to converge."""


class ShapeError(SqgError):
    """Fields defined on mismatched geometries."""
