"""
Exception types raised by the fisherbound library.

Library code raises these; only the command-line front end turns them
into exit statuses and messages.
"""

from typing import Optional


class FisherBoundError(Exception):
    """Base class for all fisherbound errors."""
    pass


class DegenerateDistributionError(FisherBoundError):
    """Output has no spread (second central moment is zero or negative)."""
    pass


class InfeasibleMomentsError(FisherBoundError):
    """Moment set violates Pearson's inequality or holds non-finite values."""
    pass


class DegenerateDirectionError(FisherBoundError):
    """Quadratic-ratio denominator vanishes for the requested mixing weight."""
    pass


class ZeroInformationError(FisherBoundError):
    """Both moment derivatives vanish, so the first two moments carry no information."""
    pass


class InvalidInformationError(FisherBoundError):
    """A Fisher information or loss input is not strictly positive."""
    pass


class ParameterDomainError(FisherBoundError):
    """Parameter value lies outside the model's valid domain."""
    pass


class UnsupportedAnalyticError(FisherBoundError):
    """Model has no closed-form moments; use Monte-Carlo estimation instead."""
    pass


class OracleError(FisherBoundError):
    """Numerical quadrature did not converge."""
    pass


class InsufficientSamplesError(FisherBoundError):
    """Too few samples to populate every output cell."""
    pass


class GridMismatchError(FisherBoundError):
    """Two curves are not defined on the same parameter grid."""
    pass


class SweepPointError(FisherBoundError):
    """A single grid point failed; carries the offending parameter value."""

    def __init__(self, theta: float, cause: Exception):
        self.theta = theta
        self.cause: Optional[Exception] = cause
        super().__init__(f"evaluation failed at theta={theta!r}: {cause}")
