"""Exception hierarchy shared by every lsnet module."""


class LsnetError(Exception):
    """Base class for all lsnet errors."""


class DimensionError(LsnetError, ValueError):
    pass


class InvalidPivots(LsnetError, ValueError):
    pass


class DataError(LsnetError, ValueError):
    pass


class NumericError(LsnetError, ArithmeticError):
    pass


class InvalidState(LsnetError, ValueError):
    pass


class InitError(LsnetError, RuntimeError):
    pass


class EmptyChain(LsnetError, ValueError):
    pass


class TestError(LsnetError, RuntimeError):
    """Raised by the Geweke harness when a monitored moment is not finite."""

    __test__ = False


class IoError(LsnetError, OSError):
    pass


class UsageError(LsnetError, ValueError):
    """Invalid command-line flags or flag combinations."""
