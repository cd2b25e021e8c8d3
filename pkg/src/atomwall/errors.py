"""Exceptions shared across the package."""


class InvalidInput(ValueError):
    """Raised when a physical or numerical input violates a precondition."""


class NonConvergence(RuntimeError):
    """Raised when an adaptive scheme exhausts its budget before reaching tolerance."""
