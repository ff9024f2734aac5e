"""Exception types shared across the package."""


class StrnError(Exception):
    """Base class for errors raised by this package."""


class InvalidArgument(StrnError):
    """An operation was called with inputs violating its preconditions."""


class ValidationError(StrnError):
    """Data or state failed an integrity check (non-finite values, bad config, ...)."""


class ParseError(StrnError):
    """A file or text blob could not be parsed."""


class ProviderMiss(StrnError):
    """A feature provider has no entry for a requested (frame, detection) key."""
