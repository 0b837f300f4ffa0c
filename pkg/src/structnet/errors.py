"""Exception types shared across the package."""


class StructnetError(Exception):
    """Base class for errors raised by this package."""


class DimensionError(StructnetError, ValueError):
    """Shapes or vector lengths do not compose."""


class SizeError(StructnetError, ValueError):
    """A transform length is unsupported (e.g. not a power of two)."""


class ParameterError(StructnetError, ValueError):
    """A scalar argument or configuration value is out of range."""


class FactorizationError(StructnetError, RuntimeError):
    """No acceptable factorization was found within the search schedule."""

    def __init__(self, message, best_delta=None, best_error=None):
        super().__init__(message)
        self.best_delta = best_delta
        self.best_error = best_error


class SelectionError(StructnetError, RuntimeError):
    """The scale-selection search was exhausted without meeting the bound."""


class CompressionInfeasibleError(StructnetError, RuntimeError):
    """A layer could not be compressed within its error budget."""

    def __init__(self, message, layer=None):
        super().__init__(message)
        self.layer = layer


class DataFormatError(StructnetError, ValueError):
    """A data file is malformed (bad magic, truncated, inconsistent counts)."""


class ModelFormatError(StructnetError, ValueError):
    """A model file is malformed or has an unsupported version."""


class ConfigError(StructnetError, ValueError):
    """A run configuration is invalid."""
