"""Exception hierarchy shared by every module."""


class MFRNNError(Exception):
    """Base class for all package errors."""


class ConfigError(MFRNNError, ValueError):
    """Inconsistent shapes, invalid hyper-parameters or malformed config files."""


class DomainError(MFRNNError, ValueError):
    """A point lies outside the domain of a map."""


class PreconditionError(MFRNNError, ValueError):
    """An operation was called on inputs that violate its contract."""


class GuardError(MFRNNError, ValueError):
    """A combinatorial cost guard was exceeded."""


class NumericError(MFRNNError, ArithmeticError):
    """A non-finite value appeared during a computation.

    Attributes
    ----------
    index : int or None
        Layer / step index at which the value was detected.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index
