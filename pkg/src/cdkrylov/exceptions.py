"""Exception hierarchy shared by every module of the package."""


class KrylovError(Exception):
    """Base class for all package errors."""


class DimensionError(KrylovError, ValueError):
    """Operand sizes do not agree."""


class SpecError(KrylovError, ValueError):
    """Invalid construction parameters (negative cond, zero gamma, ...)."""


class ParseError(KrylovError, ValueError):
    """Malformed Matrix Market input."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EstimateError(KrylovError, RuntimeError):
    """An iterative spectrum estimate did not converge.

    ``partial`` holds the best ``(lambda_min, lambda_max)`` reached.
    """

    def __init__(self, message, partial=None):
        self.partial = partial
        super().__init__(message)


class CurvatureError(KrylovError, ArithmeticError):
    """A direction has non-positive curvature where SPD behaviour is required."""


class IncompleteBasisError(KrylovError):
    """Fewer than n directions are available."""


class NotFullRankTrajectory(IncompleteBasisError):
    """The run terminated before n steps, so n-step formulas do not apply."""


class HistoryError(KrylovError, IndexError):
    """Required rows of the conjugacy-error history are missing."""
