"""Exception types raised across the package."""


class KMLPError(Exception):
    """Base class for all package errors."""


class InvalidArgument(KMLPError, ValueError):
    pass


class InvalidState(KMLPError, RuntimeError):
    pass


class NumericalError(KMLPError, ArithmeticError):
    """A linear system could not be solved to usable accuracy."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class DivergenceError(KMLPError, FloatingPointError):
    """Non-finite parameters appeared during optimization."""

    def __init__(self, message, epoch=None, layer=None):
        super().__init__(message)
        self.epoch = epoch
        self.layer = layer


class FormatError(KMLPError, ValueError):
    """A file on disk does not match the expected layout."""

    def __init__(self, message, offset=None, line=None):
        super().__init__(message)
        self.offset = offset
        self.line = line
