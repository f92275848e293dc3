"""Exception hierarchy.

Every error raised on purpose by the package derives from
:class:`LeakyLoopError`. The three intermediate classes map onto the CLI
exit codes (configuration, hypothesis, numerical).
"""


class LeakyLoopError(Exception):
    pass


class ConfigError(LeakyLoopError, ValueError):
    pass


class HypothesisError(LeakyLoopError, ValueError):
    """A precondition of an asymptotic statement does not hold."""


class NumericalError(LeakyLoopError, ArithmeticError):
    """A discretization or solver could not deliver the requested accuracy."""


# geometry
class GeometryError(LeakyLoopError, ValueError):
    pass


class NotClosed(GeometryError):
    pass


class SelfIntersecting(GeometryError):
    pass


class TooFewSamples(GeometryError):
    pass


class DegenerateSpeed(GeometryError):
    pass


class OffsetTooLarge(GeometryError):
    pass


# parameters outside the range where the fibre analysis applies
class HalfwidthTooLarge(HypothesisError):
    pass


class InvalidBeta(HypothesisError):
    pass


class NoNegativeEigenvalue(HypothesisError):
    pass


class CouplingTooWeak(HypothesisError):
    pass


class HypothesisViolated(HypothesisError):
    pass


class ExclusionUnverified(HypothesisError):
    pass


# numerics
class GridTooCoarse(NumericalError):
    pass


class MeshTooCoarse(NumericalError):
    pass


class ConvergenceFailure(NumericalError):
    pass


class FactorizationFailure(NumericalError):
    pass


class WindowTooSmall(NumericalError):
    pass
