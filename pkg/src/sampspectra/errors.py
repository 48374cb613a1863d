"""Shared exception types.

Argument problems raise plain ``ValueError``; the classes here cover the
two other failure families the library distinguishes: declining work that
would exceed a configured resource budget, and detecting that a numerical
result cannot be trusted.
"""


class CapacityError(Exception):
    """Requested work exceeds a configured size or memory budget."""


class IntegrityError(Exception):
    """A computed result failed an internal exactness or residual check."""


class ConvergenceError(IntegrityError):
    """An iterative numerical routine ran out of budget before converging.

    Carries the last two successive estimates so callers can judge how far
    the iteration was from the requested tolerance.
    """

    def __init__(self, message, estimates=None):
        super().__init__(message)
        self.estimates = tuple(estimates) if estimates is not None else None
