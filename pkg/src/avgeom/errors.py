"""Exception hierarchy shared by every module of the package."""


class AvgeomError(Exception):
    """Base class for all errors raised by avgeom."""


class EvaluationError(AvgeomError, ArithmeticError):
    """A field produced a non-finite value (or could not be evaluated)."""

    def __init__(self, message, point=None):
        if point is not None:
            message = f"{message} at point {list(point)!r}"
        super().__init__(message)
        self.point = point


class DomainError(AvgeomError, ValueError):
    """Input outside the domain of an operation (e.g. a zero tangent vector)."""


class SingularMetricError(AvgeomError, ArithmeticError):
    """A metric matrix could not be inverted."""


class DegenerateMeasureError(AvgeomError, ArithmeticError):
    """The induced measure degenerates at a quadrature node."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class IntegrationError(AvgeomError, ArithmeticError):
    """An ODE integration blew up."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class TruncationError(AvgeomError, ArithmeticError):
    """A fiber coefficient does not decay inside its declared radius."""


class ConfigError(AvgeomError, ValueError):
    """Invalid job configuration."""
