"""
This module contains the exceptions raised by pyiterates.

Classes:
    IterateError: Base class for every error of the toolkit.
    ValidationError: A parameter range or invariant is violated.
    ConfigError: A field of an experiment config is invalid.
    ExactSamplerUnavailable: Exact stationary sampling was requested but does not exist.
    TruncationError: An exact oracle needs a larger state cap.
    InsufficientDataError: Not enough usable points for a fit or a verdict.
    MissingTableError: A condition needs a table that was not supplied.
"""

from typing import Optional


class IterateError(Exception):
    """
    Base class for all pyiterates errors.
    """


class ValidationError(IterateError):
    """
    Raised when a parameter range or an invariant is violated.

    Attributes:
        invariant (str): Short name of the violated invariant.
    """

    def __init__(self, message: str, invariant: Optional[str] = None) -> None:
        super().__init__(message)
        self.invariant = invariant


class ConfigError(ValidationError):
    """
    Raised when an experiment config is invalid.

    Attributes:
        field (str): Dotted path to the offending field, e.g. "model.a".
    """

    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"{field}: {message}" if field else message, invariant=field)
        self.field = field


class ExactSamplerUnavailable(IterateError):
    def __init__(self, family: str = "") -> None:
        message = "exact sampler unavailable"
        if family:
            message += f" for family '{family}'"
        super().__init__(message)
        self.family = family


class TruncationError(IterateError):
    """
    Raised when the mass dropped by a truncated oracle exceeds its budget.

    Attributes:
        dropped (float): Mass dropped with the current cap.
        budget (float): Allowed mass.
        required_cap (int): Smallest cap that keeps the dropped mass under budget.
    """

    def __init__(self, dropped: float, budget: float, required_cap: int) -> None:
        super().__init__(
            f"truncated mass {dropped:.3e} exceeds budget {budget:.1e}; "
            f"use state_cap >= {required_cap}"
        )
        self.dropped = dropped
        self.budget = budget
        self.required_cap = required_cap


class InsufficientDataError(IterateError):
    """
    Raised when a fit window holds too few usable grid points.

    Attributes:
        point (int): First unusable grid point, if any.
    """

    def __init__(self, message: str, point: Optional[int] = None) -> None:
        super().__init__(message)
        self.point = point


class MissingTableError(IterateError):
    pass
