"""Exception hierarchy shared by all hypwarp modules."""

from __future__ import annotations


class HypwarpError(Exception):
    """Base class for every error raised by this package."""


class NotSpd(HypwarpError, ValueError):
    pass


class NotPositiveDefinite(NotSpd):
    """A metric or interpolant left the SPD cone somewhere on the test grid."""


class HypothesisViolated(HypwarpError, ValueError):
    def __init__(self, message: str, which: str = ""):
        super().__init__(message)
        self.which = which


class ZeroVector(HypwarpError, ValueError):
    pass


class EvaluationFailure(HypwarpError, ArithmeticError):
    def __init__(self, message: str, location=None):
        super().__init__(message)
        self.location = location


class NotBounded(HypwarpError, ValueError):
    pass


class ThresholdNotMet(HypwarpError):
    pass


class CenterOutOfRange(HypwarpError, ValueError):
    pass


class ChartConstructionFailure(HypwarpError):
    pass


class DomainEscape(HypwarpError):
    pass


class DegeneratePlane(HypwarpError, ValueError):
    pass


class RadiusTooSmall(HypwarpError, ValueError):
    pass


class InputOutOfRange(HypwarpError, ValueError):
    pass


class Overflow(HypwarpError, OverflowError):
    pass


class ConfigParse(HypwarpError, ValueError):
    def __init__(self, message: str, key: str = ""):
        super().__init__(message)
        self.key = key
