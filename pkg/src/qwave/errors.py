"""Exception types shared across the package."""


class QWaveError(Exception):
    """Base class for package-specific failures."""


class CoefficientDomainExceeded(QWaveError):
    """The field left the domain on which the wave speed a(u) is valid."""


class NonFinite(QWaveError):
    """A state update produced NaN or infinity."""


class DomainTooSmall(QWaveError):
    """The spatial grid cannot contain the wave over the requested horizon."""


class ConfigError(QWaveError):
    """Invalid experiment configuration."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
