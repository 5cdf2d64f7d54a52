"""
Moment-based lower bound S(theta) on the Fisher information.

The bound maximizes the Cauchy-Schwarz ratio

    h(beta) = (a + beta*b)^2 / (1 + 2*beta*c + beta^2*d)

over the mixing weight beta, with a = dmu1, b = dmu2/sqrt(mu2),
c = mu3bar and d = mu4bar - 1, and divides the maximum by mu2.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional, Tuple

from src.errors import (
    DegenerateDirectionError,
    InfeasibleMomentsError,
    InvalidInformationError,
    ZeroInformationError,
)
from src.moments import FEASIBILITY_TOLERANCE, MomentPoint

logger = logging.getLogger(__name__)

DENOMINATOR_GUARD = 1e-12
DEGENERATE_TOLERANCE = 1e-12
SKEW_ZERO_TOL = 1e-10
DERIVATIVE_ZERO_RTOL = 1e-10
BETA_ZERO_TOL = 1e-8


class BoundCase(str, Enum):
    """Which closed form of the bound applies at a point."""

    GENERAL = "General"
    CONSTANT_FIRST_MOMENT = "ConstantFirstMoment"
    CONSTANT_SECOND_MOMENT = "ConstantSecondMoment"
    SYMMETRIC = "Symmetric"
    SIMPLIFYING_CHARACTERISTIC = "SimplifyingCharacteristic"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class QuadraticRatioCoeffs:
    """Coefficients of h(beta) = (a + beta*b)^2 / (1 + 2*beta*c + beta^2*d)."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        if self.d < self.c * self.c - FEASIBILITY_TOLERANCE:
            raise InfeasibleMomentsError(f"coefficients violate d >= c^2: c={self.c!r}, d={self.d!r}")

    @classmethod
    def from_point(cls, point: MomentPoint) -> "QuadraticRatioCoeffs":
        return cls(
            a=point.dmu1,
            b=point.dmu2 / math.sqrt(point.mu2),
            c=point.mu3bar,
            d=point.mu4bar - 1.0,
        )

    def denominator(self, beta: float) -> float:
        return 1.0 + 2.0 * beta * self.c + beta * beta * self.d


@dataclass(frozen=True)
class BoundResult:
    """Optimized bound at one parameter value plus diagnostics."""

    beta_star: float
    s_value: float
    case: BoundCase
    denominator_at_beta_star: float
    unoptimized: float = 0.0
    pearson_slack: float = 0.0


def quadratic_ratio(beta: float, coeffs: QuadraticRatioCoeffs) -> float:
    """Evaluate h(beta); raises DegenerateDirectionError where the denominator vanishes."""
    denominator = coeffs.denominator(beta)
    if denominator <= DENOMINATOR_GUARD:
        raise DegenerateDirectionError(
            f"denominator {denominator!r} at beta={beta!r} is below guard {DENOMINATOR_GUARD}"
        )
    numerator = coeffs.a + beta * coeffs.b
    return numerator * numerator / denominator


def _supremum_fallback(coeffs: QuadraticRatioCoeffs) -> Tuple[float, float]:
    """
    Best of h(0) = a^2 and the beta -> +-inf limit b^2/d.

    Returns:
        Tuple of (beta, ratio); beta is infinite when the limit wins.
    """
    at_zero = coeffs.a * coeffs.a
    at_infinity = coeffs.b * coeffs.b / coeffs.d if coeffs.d > DENOMINATOR_GUARD else 0.0

    # Two-point outputs make h constant; rounding must not flip beta to infinity.
    if at_infinity > at_zero * (1.0 + 1e-12) + 1e-300:
        return -math.copysign(math.inf, coeffs.c), at_infinity
    return 0.0, at_zero


def _stationary_beta(coeffs: QuadraticRatioCoeffs) -> Optional[float]:
    """Interior maximizer (ac - b)/(bc - ad), or None when it does not exist."""
    a, b, c, d = coeffs.a, coeffs.b, coeffs.c, coeffs.d
    if a == 0.0 and b == 0.0:
        raise ZeroInformationError("both moment derivatives vanish")

    denominator = b * c - a * d
    scale = max(abs(a * c), abs(b), 1.0)
    if abs(denominator) <= DEGENERATE_TOLERANCE * scale:
        return None
    return (a * c - b) / denominator


def optimal_beta(coeffs: QuadraticRatioCoeffs) -> float:
    """
    Mixing weight that maximizes h(beta).

    Falls back to 0 or an infinite weight (see _supremum_fallback) when the
    interior stationary point does not exist.
    """
    beta = _stationary_beta(coeffs)
    if beta is None:
        beta, _ = _supremum_fallback(coeffs)
    return beta


def _at_pearson_boundary(point: MomentPoint) -> bool:
    # Pearson equality holds only for two-point outputs.
    return point.slack <= FEASIBILITY_TOLERANCE * max(1.0, point.mu4bar)


def _two_point_ratio(coeffs: QuadraticRatioCoeffs) -> Tuple[float, float]:
    """
    Maximum of h on a two-point output.

    h is constant there, so h(0) = a^2 is the value; the b^2/d limit is
    used only when a vanishes.
    """
    if coeffs.a != 0.0:
        return 0.0, coeffs.a * coeffs.a
    return _supremum_fallback(coeffs)


def _derivative_tolerance(point: MomentPoint) -> float:
    return DERIVATIVE_ZERO_RTOL * (1.0 + abs(point.dmu1) + abs(point.dmu2))


def applicable_cases(point: MomentPoint) -> Tuple[BoundCase, ...]:
    """All special cases whose defining condition holds at the point, in precedence order."""
    tol = _derivative_tolerance(point)
    lhs = point.dmu1 * math.sqrt(point.mu2) * point.mu3bar
    cases = []
    if abs(lhs - point.dmu2) <= DERIVATIVE_ZERO_RTOL * (1.0 + abs(lhs) + abs(point.dmu2)):
        cases.append(BoundCase.SIMPLIFYING_CHARACTERISTIC)
    if abs(point.dmu1) <= tol:
        cases.append(BoundCase.CONSTANT_FIRST_MOMENT)
    if abs(point.dmu2) <= tol:
        cases.append(BoundCase.CONSTANT_SECOND_MOMENT)
    if abs(point.mu3bar) <= SKEW_ZERO_TOL:
        cases.append(BoundCase.SYMMETRIC)
    return tuple(cases)


def closed_form_bound(point: MomentPoint, case: BoundCase) -> Optional[float]:
    """
    Special-case expression for S(theta).

    Returns None for General/Degenerate, or when the expression's own
    denominator vanishes (e.g. constant first moment at Pearson equality).
    """
    mu2, dmu1, dmu2 = point.mu2, point.dmu1, point.dmu2
    excess = point.mu4bar - 1.0

    if case is BoundCase.SIMPLIFYING_CHARACTERISTIC:
        return dmu1 * dmu1 / mu2
    if case is BoundCase.CONSTANT_FIRST_MOMENT:
        slack = point.slack
        if slack <= DENOMINATOR_GUARD:
            return None
        return dmu2 * dmu2 / (mu2 * mu2 * slack)
    if case is BoundCase.CONSTANT_SECOND_MOMENT:
        if excess <= DENOMINATOR_GUARD:
            return None
        shrink = 1.0 - point.mu3bar * point.mu3bar / excess
        if shrink <= DENOMINATOR_GUARD:
            return None
        return dmu1 * dmu1 / (mu2 * shrink)
    if case is BoundCase.SYMMETRIC:
        if excess <= DENOMINATOR_GUARD:
            return None
        return dmu1 * dmu1 / mu2 + dmu2 * dmu2 / (mu2 * mu2 * excess)
    return None


def fisher_bound(point: MomentPoint) -> BoundResult:
    """
    Evaluate S(theta) at a moment point.

    Args:
        point: Validated moments and moment derivatives

    Returns:
        BoundResult with beta*, S, the special-case label and diagnostics
    """
    unoptimized = point.dmu1 * point.dmu1 / point.mu2
    tol = _derivative_tolerance(point)

    if abs(point.dmu1) <= tol and abs(point.dmu2) <= tol:
        logger.warning("theta=%r: both moment derivatives vanish, reporting S=0", point.theta)
        return BoundResult(0.0, 0.0, BoundCase.DEGENERATE, 1.0, unoptimized, point.slack)

    coeffs = QuadraticRatioCoeffs.from_point(point)
    direction_failed = False
    at_boundary = _at_pearson_boundary(point)
    beta = None if at_boundary else _stationary_beta(coeffs)

    if at_boundary:
        beta, ratio = _two_point_ratio(coeffs)
        optimizer_degenerate = True
        logger.debug("theta=%r: two-point output, using beta=%r", point.theta, beta)
    elif beta is None:
        beta, ratio = _supremum_fallback(coeffs)
        optimizer_degenerate = True
        logger.debug("theta=%r: interior optimizer absent, using beta=%r", point.theta, beta)
    else:
        optimizer_degenerate = False
        try:
            ratio = quadratic_ratio(beta, coeffs)
        except DegenerateDirectionError:
            direction_failed = True
            beta, ratio = _supremum_fallback(coeffs)
            logger.debug("theta=%r: degenerate direction at beta*, clamped to beta=%r", point.theta, beta)

    if math.isinf(beta):
        denominator = math.inf
    else:
        denominator = coeffs.denominator(beta)

    cases = applicable_cases(point)
    if direction_failed:
        case = BoundCase.DEGENERATE
    elif cases:
        case = cases[0]
    elif optimizer_degenerate:
        case = BoundCase.DEGENERATE
    else:
        case = BoundCase.GENERAL

    s_value = max(ratio / point.mu2, 0.0)
    return BoundResult(beta, s_value, case, denominator, unoptimized, point.slack)


def special_case_residuals(point: MomentPoint) -> Dict[BoundCase, float]:
    """Relative gap between the general S and each applicable closed form."""
    general = fisher_bound(point).s_value
    residuals = {}
    for case in applicable_cases(point):
        closed = closed_form_bound(point, case)
        if closed is None:
            continue
        residuals[case] = abs(closed - general) / max(abs(general), 1e-300)
    return residuals


def crlb_variance(fisher: float, n: int) -> float:
    """Cramer-Rao variance floor 1/(n*F) for n independent observations."""
    if not (fisher > 0 and math.isfinite(fisher)):
        raise InvalidInformationError(f"Fisher information must be positive and finite, got {fisher!r}")
    if n < 1:
        raise ValueError(f"number of observations must be at least 1, got {n!r}")
    return 1.0 / (n * fisher)
