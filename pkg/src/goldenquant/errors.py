"""Exception types raised across the package."""

from __future__ import annotations


class GQError(Exception):
    """Base class for all package errors."""


class NonFiniteRadius(GQError, ValueError):
    pass


class NonFiniteValue(GQError, ValueError):
    pass


class FormatError(GQError, ValueError):
    """Malformed codebook file; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class IndexOutOfRange(GQError, IndexError):
    pass


class DomainError(GQError, ValueError):
    pass


class InvalidN(GQError, ValueError):
    pass


class InvalidScheme(GQError, ValueError):
    pass


class NumericalError(GQError, ArithmeticError):
    """Base for failures of the numerical machinery."""


class GridTooCoarse(NumericalError):
    pass


class EmptyCell(NumericalError):
    def __init__(self, index: int, message: str):
        self.index = index
        super().__init__(message)


class ZeroPower(NumericalError):
    pass


class NoConvergence(RuntimeWarning):
    """Iteration budget exhausted; the best iterate is returned."""
