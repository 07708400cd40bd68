"""Exception types shared across the package."""


class LampLabError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(LampLabError):
    """Vector or matrix dimensions do not match the operator."""


class InvalidInputError(LampLabError):
    """An argument violates a documented precondition."""


class InvalidSignalError(LampLabError):
    """A signal source is unreadable or degenerate."""


class CalibrationError(LampLabError):
    """Root finding for the denoiser tuning parameter failed."""


class NumericFailureError(LampLabError):
    """A computation produced non-finite or impossible values."""


class SizeLimitError(LampLabError):
    """A request exceeds the desk-scale size caps."""


class ConfigError(LampLabError):
    """A run configuration is inconsistent or contains unknown keys."""
