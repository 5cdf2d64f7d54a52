"""
Parametric system models: moments, moment derivatives, exact Fisher
information where a closed form exists, and deterministic samplers.
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import special, stats

from src.errors import ParameterDomainError, UnsupportedAnalyticError
from src.moments import MomentPoint

SQRT2 = math.sqrt(2.0)


class ModelKind(str, Enum):
    """Model zoo members; values double as command-line names."""

    GAUSSIAN_LOC_SCALE = "gaussian"
    EXPONENTIAL = "exponential"
    LAPLACE_SCALE = "laplace-scale"
    BERNOULLI = "bernoulli"
    POISSON = "poisson"
    HARD_LIMITED_GAUSSIAN = "hard-limiter"
    SQUARING_GAUSSIAN = "squaring"
    SOFT_LIMITER_GAUSSIAN = "soft-limiter"


GAUSSIAN_INPUT_KINDS = frozenset({
    ModelKind.GAUSSIAN_LOC_SCALE,
    ModelKind.HARD_LIMITED_GAUSSIAN,
    ModelKind.SQUARING_GAUSSIAN,
    ModelKind.SOFT_LIMITER_GAUSSIAN,
})
FINITE_ALPHABET_KINDS = frozenset({ModelKind.BERNOULLI, ModelKind.HARD_LIMITED_GAUSSIAN})


class ParameterMap(ABC):
    """A mapping theta -> nu(theta) together with its derivative."""

    @abstractmethod
    def value(self, theta: float) -> float:
        ...

    @abstractmethod
    def derivative(self, theta: float) -> float:
        ...


@dataclass(frozen=True)
class PolynomialMap(ParameterMap):
    """nu(theta) = c0 + c1*theta + c2*theta^2 + ..."""

    coefficients: Tuple[float, ...]

    def value(self, theta: float) -> float:
        return float(np.polynomial.polynomial.polyval(theta, self.coefficients))

    def derivative(self, theta: float) -> float:
        slope = np.polynomial.polynomial.polyder(self.coefficients)
        return float(np.polynomial.polynomial.polyval(theta, slope))

    @classmethod
    def identity(cls) -> "PolynomialMap":
        return cls((0.0, 1.0))

    @classmethod
    def constant(cls, level: float) -> "PolynomialMap":
        return cls((float(level),))


@dataclass(frozen=True)
class FunctionMap(ParameterMap):
    """User-supplied mapping with an explicit derivative."""

    fn: Callable[[float], float]
    dfn: Callable[[float], float]

    def value(self, theta: float) -> float:
        return float(self.fn(theta))

    def derivative(self, theta: float) -> float:
        return float(self.dfn(theta))


@dataclass(frozen=True)
class ModelSpec:
    """
    A parametric system from the zoo.

    mean_map houses nu(theta) for single-parameter families and nu1(theta)
    (the Gaussian input mean) for Gaussian-input kinds; variance_map houses
    nu2(theta) and is ignored by single-parameter families.
    """

    kind: ModelKind
    gamma: float = 0.0
    zeta: float = 1.0
    mean_map: ParameterMap = field(default_factory=PolynomialMap.identity)
    variance_map: ParameterMap = field(default_factory=lambda: PolynomialMap.constant(1.0))

    def __post_init__(self):
        if self.kind is ModelKind.SOFT_LIMITER_GAUSSIAN and not self.zeta > 0:
            raise ParameterDomainError(f"soft-limiter saturation zeta must be positive, got {self.zeta!r}")

    @property
    def is_analytic(self) -> bool:
        return self.kind is not ModelKind.SOFT_LIMITER_GAUSSIAN

    @property
    def has_gaussian_input(self) -> bool:
        return self.kind in GAUSSIAN_INPUT_KINDS

    @property
    def has_finite_alphabet(self) -> bool:
        return self.kind in FINITE_ALPHABET_KINDS

    def label(self) -> str:
        if self.kind is ModelKind.HARD_LIMITED_GAUSSIAN:
            return f"{self.kind.value}(gamma={self.gamma:g})"
        if self.kind is ModelKind.SOFT_LIMITER_GAUSSIAN:
            return f"{self.kind.value}(zeta={self.zeta:g})"
        return self.kind.value


def q_function(x):
    """Gaussian tail probability Q(x) = erfc(x/sqrt(2))/2; accepts scalars or arrays."""
    if np.ndim(x):
        return 0.5 * special.erfc(np.asarray(x, dtype=float) / SQRT2)
    return 0.5 * float(special.erfc(x / SQRT2))


def soft_limiter_transfer(y, zeta: float):
    """Saturation curve z = erf(y / sqrt(2*zeta^2))."""
    return special.erf(np.asarray(y, dtype=float) / (SQRT2 * zeta))


def _single_parameter(model: ModelSpec, theta: float) -> Tuple[float, float]:
    return model.mean_map.value(theta), model.mean_map.derivative(theta)


def _gaussian_parameters(model: ModelSpec, theta: float) -> Tuple[float, float, float, float]:
    nu1, dnu1 = model.mean_map.value(theta), model.mean_map.derivative(theta)
    nu2, dnu2 = model.variance_map.value(theta), model.variance_map.derivative(theta)
    if not nu2 > 0:
        raise ParameterDomainError(f"{model.label()}: input variance nu2({theta!r})={nu2!r} must be positive")
    return nu1, dnu1, nu2, dnu2


def _positive_rate(model: ModelSpec, theta: float) -> Tuple[float, float]:
    nu, dnu = _single_parameter(model, theta)
    if not nu > 0:
        raise ParameterDomainError(f"{model.label()}: nu({theta!r})={nu!r} must be positive")
    return nu, dnu


def _probability(model: ModelSpec, theta: float) -> Tuple[float, float]:
    nu, dnu = _single_parameter(model, theta)
    if not 0 < nu < 1:
        raise ParameterDomainError(f"{model.label()}: nu({theta!r})={nu!r} must lie in (0, 1)")
    return nu, dnu


def _hard_limiter_probability(model: ModelSpec, theta: float) -> Tuple[float, float]:
    """P(Z=+1) = Q((gamma - nu1)/sqrt(nu2)) and its theta-derivative."""
    nu1, dnu1, nu2, dnu2 = _gaussian_parameters(model, theta)
    root = math.sqrt(nu2)
    x = (model.gamma - nu1) / root
    q = q_function(x)
    density = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    dq = density * (dnu1 + x * dnu2 / (2.0 * root)) / root
    if not 0 < q < 1:
        raise ParameterDomainError(f"{model.label()}: output probability {q!r} at theta={theta!r} is degenerate")
    return q, dq


def _gaussian_moments(model: ModelSpec, theta: float) -> MomentPoint:
    nu1, dnu1, nu2, dnu2 = _gaussian_parameters(model, theta)
    return MomentPoint(theta, nu1, nu2, 0.0, 3.0, dnu1, dnu2)


def _exponential_moments(model: ModelSpec, theta: float) -> MomentPoint:
    nu, dnu = _positive_rate(model, theta)
    return MomentPoint(theta, 1.0 / nu, 1.0 / nu ** 2, 2.0, 9.0, -dnu / nu ** 2, -2.0 * dnu / nu ** 3)


def _laplace_moments(model: ModelSpec, theta: float) -> MomentPoint:
    nu, dnu = _positive_rate(model, theta)
    return MomentPoint(theta, 0.0, 2.0 * nu * nu, 0.0, 6.0, 0.0, 4.0 * nu * dnu)


def _two_point_moments(theta: float, p: float, dp: float, spacing: float, low: float) -> MomentPoint:
    """Moments of an output taking low+spacing with probability p and low otherwise."""
    spread = p * (1.0 - p)
    mu1 = low + spacing * p
    mu2 = spacing * spacing * spread
    mu3bar = (1.0 - 2.0 * p) / math.sqrt(spread)
    mu4bar = 1.0 / spread - 3.0
    dmu1 = spacing * dp
    dmu2 = spacing * spacing * (1.0 - 2.0 * p) * dp
    return MomentPoint(theta, mu1, mu2, mu3bar, mu4bar, dmu1, dmu2)


def _bernoulli_moments(model: ModelSpec, theta: float) -> MomentPoint:
    nu, dnu = _probability(model, theta)
    return _two_point_moments(theta, nu, dnu, 1.0, 0.0)


def _poisson_moments(model: ModelSpec, theta: float) -> MomentPoint:
    nu, dnu = _positive_rate(model, theta)
    return MomentPoint(theta, nu, nu, 1.0 / math.sqrt(nu), 1.0 / nu + 3.0, dnu, dnu)


def _hard_limiter_moments(model: ModelSpec, theta: float) -> MomentPoint:
    q, dq = _hard_limiter_probability(model, theta)
    return _two_point_moments(theta, q, dq, 2.0, -1.0)


def _squaring_moments(model: ModelSpec, theta: float) -> MomentPoint:
    # Z = Y^2 with Y ~ N(m, v): Z/v is non-central chi-square with one degree of freedom.
    m, dm, v, dv = _gaussian_parameters(model, theta)
    m2 = m * m
    mu1 = m2 + v
    mu2 = 2.0 * v * (v + 2.0 * m2)
    mu3 = 8.0 * v * v * (v + 3.0 * m2)
    mu4 = 48.0 * v ** 3 * (v + 4.0 * m2) + 3.0 * mu2 * mu2
    dmu1 = 2.0 * m * dm + dv
    dmu2 = 4.0 * v * dv + 8.0 * m * dm * v + 4.0 * m2 * dv
    return MomentPoint.from_central(theta, mu1, mu2, mu3, mu4, dmu1, dmu2)


_MOMENTS = {
    ModelKind.GAUSSIAN_LOC_SCALE: _gaussian_moments,
    ModelKind.EXPONENTIAL: _exponential_moments,
    ModelKind.LAPLACE_SCALE: _laplace_moments,
    ModelKind.BERNOULLI: _bernoulli_moments,
    ModelKind.POISSON: _poisson_moments,
    ModelKind.HARD_LIMITED_GAUSSIAN: _hard_limiter_moments,
    ModelKind.SQUARING_GAUSSIAN: _squaring_moments,
}


def model_moments(model: ModelSpec, theta: float) -> MomentPoint:
    """Closed-form moments and moment derivatives at theta."""
    try:
        moments_fn = _MOMENTS[model.kind]
    except KeyError:
        raise UnsupportedAnalyticError(
            f"{model.label()} has no closed-form moments; estimate them by Monte Carlo"
        ) from None
    return moments_fn(model, theta)


def exact_fisher(model: ModelSpec, theta: float) -> Optional[float]:
    """
    Closed-form Fisher information F(theta), or None when no compact form exists.

    The squaring device's F is available from the quadrature oracle in
    src.montecarlo instead.
    """
    kind = model.kind
    if kind is ModelKind.GAUSSIAN_LOC_SCALE:
        _, dnu1, nu2, dnu2 = _gaussian_parameters(model, theta)
        return dnu1 * dnu1 / nu2 + dnu2 * dnu2 / (2.0 * nu2 * nu2)
    if kind in (ModelKind.EXPONENTIAL, ModelKind.LAPLACE_SCALE):
        nu, dnu = _positive_rate(model, theta)
        return dnu * dnu / (nu * nu)
    if kind is ModelKind.BERNOULLI:
        nu, dnu = _probability(model, theta)
        return dnu * dnu / (nu * (1.0 - nu))
    if kind is ModelKind.POISSON:
        nu, dnu = _positive_rate(model, theta)
        return dnu * dnu / nu
    if kind is ModelKind.HARD_LIMITED_GAUSSIAN:
        q, dq = _hard_limiter_probability(model, theta)
        return dq * dq / (q * (1.0 - q))
    return None


def random_stream(seed: int, stream: int) -> np.random.Generator:
    """Counter-based generator keyed by (seed, stream); independent of call order."""
    if seed < 0 or stream < 0:
        raise ValueError(f"seed and stream must be non-negative, got seed={seed!r}, stream={stream!r}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stream])))


def open_uniform(generator: np.random.Generator, n: int) -> np.ndarray:
    """Uniform draws strictly inside (0, 1)."""
    return (np.floor(generator.random(n) * 2.0 ** 53) + 0.5) / 2.0 ** 53


def draw_noise(generator: np.random.Generator, model: ModelSpec, n: int) -> np.ndarray:
    if model.has_gaussian_input:
        return generator.standard_normal(n)
    return open_uniform(generator, n)


def base_draws(model: ModelSpec, n: int, seed: int, stream: int = 0) -> np.ndarray:
    """
    Parameter-free driving noise for a model: standard normals for
    Gaussian-input kinds, open-interval uniforms otherwise.

    Feeding the same draws to transform() at two parameter values gives
    common random numbers.
    """
    if n < 1:
        raise ValueError(f"sample count must be at least 1, got {n!r}")
    return draw_noise(random_stream(seed, stream), model, n)


def transform(model: ModelSpec, theta: float, draws: np.ndarray) -> np.ndarray:
    """Map driving noise to system outputs at theta."""
    kind = model.kind

    if model.has_gaussian_input:
        nu1, _, nu2, _ = _gaussian_parameters(model, theta)
        y = nu1 + math.sqrt(nu2) * draws
        if kind is ModelKind.GAUSSIAN_LOC_SCALE:
            return y
        if kind is ModelKind.HARD_LIMITED_GAUSSIAN:
            return np.where(y >= model.gamma, 1.0, -1.0)
        if kind is ModelKind.SQUARING_GAUSSIAN:
            return y * y
        return soft_limiter_transfer(y, model.zeta)

    if kind is ModelKind.EXPONENTIAL:
        nu, _ = _positive_rate(model, theta)
        return -np.log(draws) / nu
    if kind is ModelKind.LAPLACE_SCALE:
        nu, _ = _positive_rate(model, theta)
        return np.where(draws < 0.5, nu * np.log(2.0 * draws), -nu * np.log(2.0 * (1.0 - draws)))
    if kind is ModelKind.BERNOULLI:
        nu, _ = _probability(model, theta)
        return (draws < nu).astype(float)
    nu, _ = _positive_rate(model, theta)
    return stats.poisson.ppf(draws, nu)


def sample(model: ModelSpec, theta: float, n: int, seed: int, stream: int = 0) -> np.ndarray:
    """Draw n outputs at theta; deterministic for fixed (model, theta, n, seed, stream)."""
    return transform(model, theta, base_draws(model, n, seed, stream))
