"""Common exception base for the toolkit."""


class KmeliaError(Exception):
    """Base class for all errors raised by this package."""


class IncompleteProductWarning(UserWarning):
    """Analysis ran on a bound-truncated product; absence results are one-sided."""
