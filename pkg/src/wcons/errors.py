"""Exception hierarchy shared by every wcons module."""


class WconsError(Exception):
    """Base class for all errors raised by wcons."""


class ValidationError(WconsError, ValueError):
    """A value violates the invariants of its type."""


class NonFinite(ValidationError):
    pass


class NegativeWeight(ValidationError):
    pass


class WeightSumMismatch(ValidationError):
    pass


class NonPositiveVariance(ValidationError):
    pass


class NonMonotoneQuantiles(ValidationError):
    pass


class NotSPD(ValidationError):
    pass


class OutOfDomain(ValidationError):
    pass


class GridMismatch(WconsError, ValueError):
    pass


class LengthMismatch(WconsError, ValueError):
    pass


class DimensionMismatch(WconsError, ValueError):
    pass


class SizeMismatch(WconsError, ValueError):
    pass


class UnsupportedOrder(WconsError, ValueError):
    pass


class TooLarge(WconsError, ValueError):
    pass


class NoConvergence(WconsError, RuntimeError):
    def __init__(self, max_iter, residual):
        super().__init__(f"no convergence after {max_iter} iterations (residual {residual:.3e})")
        self.max_iter = max_iter
        self.residual = residual


class EigenFailure(WconsError, RuntimeError):
    pass


class SparsityMismatch(WconsError, ValueError):
    pass


class RepresentationMismatch(WconsError, ValueError):
    pass


class InsufficientData(WconsError, ValueError):
    pass


class EmptyData(WconsError, ValueError):
    pass


class ScenarioSyntaxError(WconsError, ValueError):
    """The scenario document is not parseable; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{where}")
        self.line = line


class SchemaError(WconsError, ValueError):
    """A scenario field is missing, unknown or of the wrong shape."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
