"""Exception types raised across the package."""


class HybridPrecodingError(Exception):
    """Base class for all package errors."""


# -- numerical failures -------------------------------------------------------

class NumericalError(HybridPrecodingError, ArithmeticError):
    """A factorization or iteration could not produce a finite answer."""


class NotHermitian(NumericalError):
    pass


class NotPositiveDefinite(NumericalError):
    pass


class ConvergenceFailure(NumericalError):
    pass


class ZeroPower(NumericalError):
    """Power normalization requested for an all-zero precoder."""


# -- invalid arguments ----------------------------------------------------------

class InvalidArgument(HybridPrecodingError, ValueError):
    pass


class DimensionMismatch(InvalidArgument):
    pass


class ShapeMismatch(DimensionMismatch):
    pass


class AlreadyNormalized(InvalidArgument):
    pass


class BadSplit(InvalidArgument):
    pass


class EmptySet(InvalidArgument):
    pass


class EmptyTrajectory(InvalidArgument):
    pass


class EmptyBatch(InvalidArgument):
    pass


class EmptyDataset(InvalidArgument):
    pass


class StepTooLarge(InvalidArgument):
    """Finite-difference probe would push a schedule entry to or below zero."""


class DegenerateParameters(InvalidArgument):
    pass


class FormatError(InvalidArgument):
    """Malformed dataset or schedule file."""
