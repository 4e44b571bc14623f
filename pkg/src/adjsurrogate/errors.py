"""Exception types raised across the package."""


class AdjSurrogateError(Exception):
    """Base class for all package errors."""


class NotPositiveDefinite(AdjSurrogateError, ValueError):
    pass


class DimensionMismatch(AdjSurrogateError, ValueError):
    pass


class NonFiniteState(AdjSurrogateError, FloatingPointError):
    """Raised when a model integration produces inf/nan (trajectory blow-up)."""


class MissingAdjointData(AdjSurrogateError, ValueError):
    pass


class NonFiniteLoss(AdjSurrogateError, FloatingPointError):
    pass


class ZeroVariance(AdjSurrogateError, ArithmeticError):
    pass
