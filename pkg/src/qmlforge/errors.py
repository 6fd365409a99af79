"""Exception types raised across the package."""


class QMLForgeError(Exception):
    """Base class for all package errors."""


class WidthMismatch(QMLForgeError, ValueError):
    """Raised when objects of different qubit widths are combined."""


# compose() and the simulators report the same condition
MismatchedWidth = WidthMismatch


class IndexOutOfRange(QMLForgeError, IndexError):
    """An angle expression references a parameter or input that was not supplied."""


class MissingAngle(QMLForgeError, ValueError):
    pass


class UnexpectedAngle(QMLForgeError, ValueError):
    pass


class NoisyStatevector(QMLForgeError, ValueError):
    """A noise model was handed to the pure-state simulator."""


class NonAdjacentGate(QMLForgeError, ValueError):
    pass


class UnsupportedGate(QMLForgeError, ValueError):
    pass


class UnsupportedBackend(QMLForgeError, ValueError):
    pass


class QubitLimitExceeded(QMLForgeError, ValueError):
    pass


class ConfigError(QMLForgeError, ValueError):
    """Invalid experiment configuration. ``field`` names the offending entry."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class DegenerateFitWarning(UserWarning):
    """Training data for a mitigation map had no spread; identity map used."""
