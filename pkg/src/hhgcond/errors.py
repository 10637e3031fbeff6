"""Exception types shared across the package."""


class GuardError(ValueError):
    """A numerical guard (truncation, dimension, grid radius) was violated."""


class ConfigError(ValueError):
    """A run configuration is malformed or inconsistent."""


class VerificationError(AssertionError):
    """A verification check failed."""
