"""Exception hierarchy shared by all modules."""


class QStokesError(Exception):
    """Base class for every error raised by the toolkit."""


# series arithmetic
class EmptyWindow(QStokesError):
    pass


class NonInvertible(QStokesError):
    pass


class AllBelowThreshold(QStokesError):
    pass


class NonFinite(QStokesError, ArithmeticError):
    pass


# special functions
class QModulusTooSmall(QStokesError):
    pass


class NonConvergent(QStokesError):
    pass


class DivergentProduct(QStokesError):
    pass


# operators and modules
class UndefinedValuation(QStokesError):
    pass


class NonIntegralSlopes(QStokesError):
    pass


class NonInvertibleLeading(QStokesError):
    pass


class IdentityViolated(QStokesError):
    def __init__(self, which: str, residual: float):
        super().__init__(f"{which}: max residual {residual:.3e}")
        self.which = which
        self.residual = residual


class NonInvertibleGauge(QStokesError):
    pass


class EigDecompositionFailed(QStokesError):
    pass


# reduction
class TailNotNegligible(QStokesError):
    pass


class LinearSolveSingular(QStokesError):
    pass


class OrderTooSmall(QStokesError):
    pass


# summation and cocycles
class ForbiddenDirection(QStokesError):
    pass


class WindowTooNarrow(QStokesError):
    pass


class NotQGevrey(QStokesError):
    pass


class N0TooLarge(QStokesError):
    pass


class PointTooFar(QStokesError):
    pass


class DirectionsEqual(QStokesError):
    pass


class PoleHit(QStokesError):
    pass


class WrongShape(QStokesError):
    pass


class TruncationInsufficient(QStokesError):
    pass


# serialization
class SchemaError(QStokesError):
    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        where = []
        if field is not None:
            where.append(f"field {field!r}")
        if line is not None:
            where.append(f"line {line}")
        text = message if not where else f"{message} ({', '.join(where)})"
        super().__init__(text)
        self.field = field
        self.line = line
