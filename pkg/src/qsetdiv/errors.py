class QsetdivError(Exception):
    """Base class for library errors."""


class PreconditionError(QsetdivError, ValueError):
    """An input violates a documented precondition."""


class ResourceLimitError(QsetdivError):
    """A dimension or enumeration cap would be exceeded."""


class SingularOperatorError(QsetdivError, ValueError):
    """A logarithm or negative power was requested on a singular operator."""


class CompositionError(QsetdivError):
    """Two set descriptions cannot be tensored exactly."""


class ConfigurationError(QsetdivError):
    """A canonical choice required by a construction does not exist."""


class UndefinedRateError(QsetdivError):
    """A transformation rate has a denominator interval touching zero."""


class ConvergenceError(QsetdivError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
