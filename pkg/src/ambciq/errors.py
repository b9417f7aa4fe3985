"""Shared exception types."""


class NumericalError(RuntimeError):
    """A linear system or matrix inversion that must be well-posed was not."""
