"""Shared exception types."""


class ZeroAverageError(ValueError):
    """Raised when an operation requires a nonzero image average."""


class OutOfBandError(ValueError):
    """Raised when a frequency lies outside the representable band of a spectrum."""
