"""Exception hierarchy shared across the package."""


class VQClustError(Exception):
    """Base class for all package errors."""


class ConfigurationError(VQClustError, ValueError):
    """An option or parameter is outside its supported range."""


class UsageError(VQClustError, ValueError):
    """Arguments are individually valid but mutually inconsistent (shapes, dimensions)."""


class IngestionError(VQClustError):
    """A data file could not be parsed."""

    def __init__(self, message, path=None, row=None):
        self.path = path
        self.row = row
        super().__init__(message)


class NumericError(VQClustError, ArithmeticError):
    """A computation produced a non-finite value."""

    def __init__(self, message, index=None):
        self.index = index
        super().__init__(message)
