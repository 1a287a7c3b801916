"""Exception hierarchy shared by every acsq module"""

from typing import Any, Optional, Tuple


class AcsqError(Exception):
    """Base class for all errors raised by acsq"""


class DomainError(AcsqError, ValueError):
    """A point, coordinate or group element lies outside its domain"""


class DegenerateParametrizationError(AcsqError, ValueError):
    """The parametrization is not one-to-one on the validation sample"""


class AdmissibilityError(AcsqError, ValueError):
    """
    A fiducial vector violates the admissibility condition.

    The attribute ``constant`` names the divergent quantity ('A' or 'B').
    """

    def __init__(self, message: str, constant: str):
        self.constant = constant
        super().__init__(message)


class AccuracyError(AcsqError, RuntimeError):
    """A numerical result missed its tolerance"""

    def __init__(self, message: str, achieved: float, tolerance: float):
        self.achieved = achieved
        self.tolerance = tolerance
        super().__init__(message)


class DivergenceError(AcsqError, ArithmeticError):
    """
    An integral grows without bound under domain extension.

    ``certificate`` carries the boundedness certificate when one was computed.
    """

    def __init__(self, message: str, certificate: Optional[Any] = None):
        self.certificate = certificate
        super().__init__(message)


class ResolutionError(AcsqError, ValueError):
    """The oscillatory quadrature cannot resolve the requested momentum"""

    def __init__(self, message: str, requested: float, allowed: float):
        self.requested = requested
        self.allowed = allowed
        super().__init__(message)


class NumericError(AcsqError, ArithmeticError):
    """Non-finite samples were produced while evaluating an integrand"""


class BasisMismatchError(AcsqError, ValueError):
    """Operands live in different truncated bases"""


class ConfigError(AcsqError, ValueError):
    """The experiment configuration is invalid; ``field`` holds the offending path"""

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        super().__init__(message)


class ExpressionSyntaxError(AcsqError, ValueError):
    """
    A phase-space expression could not be parsed.

    ``position`` is the half-open character span (start, end) of the offending
    token inside ``source``.
    """

    def __init__(self, source: str, position: Optional[Tuple[int, int]], message: str):
        self.source = source
        self.position = position
        self.reason = message
        super().__init__(self.render())

    def render(self) -> str:
        if self.position is None:
            return f"{self.reason} in expression '{self.source}'"
        start, end = self.position
        caret = " " * start + "^" * max(1, end - start)
        return (
            f"{self.reason} at position {start}:\n"
            f"  {self.source}\n"
            f"  {caret}"
        )
