"""Exception hierarchy shared by every module."""


class RcLabError(Exception):
    """Base class for all errors raised by rc_lab."""


class DomainError(RcLabError, ValueError):
    """An argument lies outside the domain of an operation."""


class UnsupportedLawError(DomainError):
    """A distribution parameter leaves the finite mean/variance class."""


class DegenerateError(RcLabError, ArithmeticError):
    """A quantity degenerates (zero scale, vanishing tail mass)."""


class UsageError(RcLabError):
    """Bad command-line or config-file input. ``key`` names the offender."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key
