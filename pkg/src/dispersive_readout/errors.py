"""Exception types shared across the package.

Each maps to a CLI exit status: domain problems exit with 3 and numerical
failures with 4.
"""


class ReadoutError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class DomainError(ReadoutError, ValueError):
    """An argument lies outside the domain of the operation."""

    exit_code = 3


class DegenerateStatisticsError(DomainError):
    """The two qubit states produce identical count distributions."""


class CapExceededError(DomainError):
    """A requested target cannot be reached below the configured cap."""


class NumericalFailure(ReadoutError, RuntimeError):
    """An iterative procedure failed to converge.

    Attributes:
        bracket: The last bracket ``(lo, hi)`` held by the solver, if any.
    """

    exit_code = 4

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket
