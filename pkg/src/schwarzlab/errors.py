"""Exception hierarchy shared by every schwarzlab module."""

from __future__ import annotations


class SchwarzlabError(Exception):
    """Base class for all errors raised by the package."""


# jet arithmetic / expression evaluation
class DivisionByZeroJet(SchwarzlabError, ZeroDivisionError):
    def __init__(self, message: str = "division by a jet with vanishing value", path: str | None = None):
        super().__init__(message if path is None else f"{message} in subexpression {path!r}")
        self.path = path


class BranchCutViolation(SchwarzlabError, ValueError):
    def __init__(self, message: str = "argument on the principal branch cut (-inf, 0]", path: str | None = None):
        super().__init__(message if path is None else f"{message} in subexpression {path!r}")
        self.path = path


class StencilOutsideDomain(SchwarzlabError, ValueError):
    pass


# parsing
class ExprSyntaxError(SchwarzlabError, SyntaxError):
    """Malformed expression text; ``offset`` is the 0-based byte offset of the problem."""

    def __init__(self, message: str, offset: int, text: str = ""):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset
        self.text = text


class UnknownFunction(ExprSyntaxError):
    pass


class DepthLimitExceeded(ExprSyntaxError):
    pass


# operators
class CriticalPoint(SchwarzlabError, ValueError):
    pass


class NotSensePreserving(SchwarzlabError, ValueError):
    pass


# domains / maps
class OutsideDomain(SchwarzlabError, ValueError):
    pass


class NewtonDiverged(SchwarzlabError, RuntimeError):
    pass


class DegenerateAffine(SchwarzlabError, ValueError):
    pass


class CoincidentArguments(SchwarzlabError, ValueError):
    pass


# curves / reflections
class DegenerateQuadruple(SchwarzlabError, ValueError):
    pass


class OutsideCollar(SchwarzlabError, ValueError):
    pass


class AmbiguousProjection(SchwarzlabError, ValueError):
    pass


class OrientationReversed(SchwarzlabError, ValueError):
    def __init__(self, mu: complex):
        super().__init__(f"map reverses orientation, |mu| = {abs(mu):.6g} > 1")
        self.mu = mu


class CurveSelfIntersection(SchwarzlabError, ValueError):
    pass


class InvalidCurve(SchwarzlabError, ValueError):
    pass
