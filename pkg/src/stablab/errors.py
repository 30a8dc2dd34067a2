"""Exception types raised by the certification engines.

Every failure mode that a caller can act on gets its own class; all of them
derive from :class:`StabLabError` so pipeline drivers can catch the family and
downgrade a stage to an inconclusive entry instead of crashing the run.
"""

from __future__ import annotations

__all__ = [
    "StabLabError",
    "ValidationError",
    "ParseError",
    "SpectrumHit",
    "TailInconclusive",
    "RangeViolation",
    "ResolutionTooCoarse",
    "WindowTooNarrow",
    "SingularD",
    "SplitInfeasible",
    "QuadratureUnstable",
    "BracketInvalid",
]


class StabLabError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(StabLabError):
    """A scenario or profile violates a structural constraint.

    Carries the list of violated clauses in ``violations``.
    """

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = list(violations or [])


class ParseError(StabLabError):
    """A scenario file could not be decoded."""


class SpectrumHit(StabLabError):
    """A requested evaluation point is on (or numerically on) the spectrum."""

    def __init__(self, message, lam=None, distance=None):
        super().__init__(message)
        self.lam = lam
        self.distance = distance


class TailInconclusive(StabLabError):
    """The truncated head and the tail bound disagree beyond tolerance.

    Raising this means the requested quantity cannot be certified at the
    current truncation; increase ``n_max`` or loosen the tolerance.
    """


class RangeViolation(StabLabError):
    """A smoothing exponent asks for a vector outside the admissible range.

    For diagonal models this is detected through divergence of the smoothed
    coefficient series.
    """


class ResolutionTooCoarse(StabLabError):
    """Grid resolution is below the minimum supported density."""


class WindowTooNarrow(StabLabError):
    """A regression window spans less than one decade."""


class SingularD(StabLabError):
    """The p-by-p transfer block I - C R(lam) B is numerically singular."""

    def __init__(self, message, lam=None, smin=None):
        super().__init__(message)
        self.lam = lam
        self.smin = smin


class SplitInfeasible(StabLabError):
    """No exponent split (beta1, gamma1) with the requested sum fits the budget."""


class QuadratureUnstable(StabLabError):
    """Halving the quadrature mesh moved the result more than the tolerance."""


class BracketInvalid(StabLabError):
    """A bisection bracket does not straddle a verdict change."""


class IoError(StabLabError):
    """Report or scenario files could not be read or written."""
