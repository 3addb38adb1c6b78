"""Exception hierarchy for so3spline.

Every error carries the CLI exit code it maps to. Argument errors also derive
from ``ValueError`` so callers that only know the builtin still catch them.
"""

from __future__ import annotations

from typing import Sequence

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_PARSE = 3


class So3SplineError(Exception):
    """Base class for all library errors."""

    exit_code: int = EXIT_VALIDATION


class InvalidArgumentError(So3SplineError, ValueError):
    """An argument is outside the documented domain of an operation."""


class UnsupportedDegreeError(InvalidArgumentError):
    """A Wigner degree above the configured cap was requested."""

    def __init__(self, degree: int, cap: int):
        self.degree = degree
        self.cap = cap
        super().__init__(f"Degree {degree} exceeds the supported cap {cap}")


class RotationValidationError(InvalidArgumentError):
    """A rotation record is not a valid element of SO(3)."""


class DegenerateSetError(So3SplineError):
    """A point set contains coincident points (separation distance zero)."""

    def __init__(self, message: str, indices: Sequence[int] = ()):
        self.indices = tuple(int(i) for i in indices)
        super().__init__(message)


class UnisolvencyError(So3SplineError):
    """The centers do not determine polynomials of the required degree."""

    def __init__(self, degree: int, message: str = ""):
        self.degree = degree
        super().__init__(message or f"Centers are not unisolvent for polynomials of degree {degree}")


class ConditioningError(So3SplineError):
    """A linear system is too ill-conditioned to be solved reliably."""

    def __init__(self, condition: float, limit: float, what: str = "system"):
        self.condition = condition
        self.limit = limit
        super().__init__(
            f"{what} condition estimate {condition:.3e} exceeds the limit {limit:.3e}"
        )


class DensityError(So3SplineError):
    """A local center set is empty or cannot reproduce the required polynomials."""

    def __init__(self, message: str, radius: float | None = None):
        self.radius = radius
        hint = " Increase the localization radius." if radius is not None else ""
        super().__init__(message + hint)


class ParseError(So3SplineError):
    """A file could not be parsed into the expected record structure."""

    exit_code = EXIT_PARSE

    def __init__(self, message: str, record: int | None = None):
        self.record = record
        where = f" (record {record})" if record is not None else ""
        super().__init__(message + where)
