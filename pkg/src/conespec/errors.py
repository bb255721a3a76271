"""Exception types shared across the package."""


class UsageError(ValueError):
    """Bad input: dimension mismatch, point outside the cone, invalid parameters."""


class NumericalError(RuntimeError):
    """A numerical procedure failed (no certificate, precondition residual too large, ...)."""
