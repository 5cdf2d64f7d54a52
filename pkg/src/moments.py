"""
Moment types for the information bound.

Holds the first two raw/central moments, the normalized third and fourth
central moments (skewness and kurtosis), and the two moment derivatives
that the bound needs at a single parameter value.
"""

import math
from dataclasses import dataclass
from typing import Tuple

from src.errors import DegenerateDistributionError, InfeasibleMomentsError

# Absolute slack allowed on Pearson's inequality before a moment set is rejected.
FEASIBILITY_TOLERANCE = 1e-9


def normalize_moments(mu1: float, mu2: float, mu3: float, mu4: float) -> Tuple[float, float]:
    """
    Normalize the third and fourth central moments.

    Args:
        mu1: First raw moment (unused by the normalization, kept for symmetry with callers)
        mu2: Second central moment, must be positive
        mu3: Third central moment
        mu4: Fourth central moment

    Returns:
        Tuple of (mu3bar, mu4bar) = (mu3 * mu2^-3/2, mu4 * mu2^-2)
    """
    if not mu2 > 0:
        raise DegenerateDistributionError(f"second central moment must be positive, got {mu2!r}")
    if mu4 < 0:
        raise InfeasibleMomentsError(f"fourth central moment must be non-negative, got {mu4!r}")

    return mu3 / mu2 ** 1.5, mu4 / (mu2 * mu2)


def pearson_slack(mu3bar: float, mu4bar: float) -> float:
    """Distance mu4bar - mu3bar^2 - 1 to Pearson's boundary (negative means infeasible)."""
    return mu4bar - mu3bar * mu3bar - 1.0


def _check_shape(mu2: float, mu3bar: float, mu4bar: float) -> None:
    if not mu2 > 0:
        raise DegenerateDistributionError(f"second central moment must be positive, got {mu2!r}")
    slack = pearson_slack(mu3bar, mu4bar)
    if slack < -FEASIBILITY_TOLERANCE:
        raise InfeasibleMomentsError(
            f"moments violate Pearson's inequality: mu4bar={mu4bar!r}, mu3bar={mu3bar!r} (slack {slack:.3e})"
        )


@dataclass(frozen=True)
class OutputMoments:
    """First four output moments at one parameter value, without derivatives."""

    mu1: float
    mu2: float
    mu3bar: float
    mu4bar: float

    def __post_init__(self):
        values = (self.mu1, self.mu2, self.mu3bar, self.mu4bar)
        if not all(math.isfinite(v) for v in values):
            raise InfeasibleMomentsError(f"moments must be finite, got {values!r}")
        _check_shape(self.mu2, self.mu3bar, self.mu4bar)

    @property
    def slack(self) -> float:
        return pearson_slack(self.mu3bar, self.mu4bar)

    def with_derivatives(self, theta: float, dmu1: float, dmu2: float) -> "MomentPoint":
        return MomentPoint(theta, self.mu1, self.mu2, self.mu3bar, self.mu4bar, dmu1, dmu2)


@dataclass(frozen=True)
class MomentPoint:
    """Everything S(theta) needs at one parameter value."""

    theta: float
    mu1: float
    mu2: float
    mu3bar: float
    mu4bar: float
    dmu1: float
    dmu2: float

    def __post_init__(self):
        values = (self.theta, self.mu1, self.mu2, self.mu3bar, self.mu4bar, self.dmu1, self.dmu2)
        if not all(math.isfinite(v) for v in values):
            raise InfeasibleMomentsError(f"moment point must be finite, got {values!r}")
        _check_shape(self.mu2, self.mu3bar, self.mu4bar)

    @property
    def slack(self) -> float:
        return pearson_slack(self.mu3bar, self.mu4bar)

    @property
    def output_moments(self) -> OutputMoments:
        return OutputMoments(self.mu1, self.mu2, self.mu3bar, self.mu4bar)

    @classmethod
    def from_central(cls, theta: float, mu1: float, mu2: float, mu3: float, mu4: float,
                     dmu1: float, dmu2: float) -> "MomentPoint":
        """Build a point from raw third/fourth central moments."""
        mu3bar, mu4bar = normalize_moments(mu1, mu2, mu3, mu4)
        return cls(theta, mu1, mu2, mu3bar, mu4bar, dmu1, dmu2)
