"""Shared exception types."""


class NumericalError(RuntimeError):
    """A computation degenerated numerically (vanishing mass, cap hit, non-finite value)."""
