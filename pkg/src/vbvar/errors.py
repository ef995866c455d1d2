"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Raised when inputs or configuration violate a documented invariant."""


class NumericalFault(RuntimeError):
    """Raised when an iterative routine produces values that are analytically
    impossible (non-SPD system, nonpositive rate, non-finite bound)."""
