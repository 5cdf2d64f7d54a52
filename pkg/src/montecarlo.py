"""
Sample-based moment estimation for systems without closed-form moments.

Moments are measured from simulated outputs, moment derivatives come from
central differences with common random numbers (the same driving noise at
theta+h and theta-h). Quadrature oracles supply the exact Fisher information
of the squaring device and the exact soft-limiter moments for cross-checks.
"""

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from src.errors import (
    DegenerateDistributionError,
    InsufficientSamplesError,
    OracleError,
    ParameterDomainError,
)
from src.models import ModelKind, ModelSpec, draw_noise, random_stream, soft_limiter_transfer, transform
from src.moments import MomentPoint, OutputMoments, normalize_moments

logger = logging.getLogger(__name__)

MIN_SAMPLES = 1000

MomentCache = Dict[Tuple[float, int], OutputMoments]


@dataclass(frozen=True)
class SimConfig:
    """Monte-Carlo settings for one measurement run."""

    n_samples: int = 1_000_000
    base_seed: int = 42
    fd_step: float = 0.01
    use_common_random_numbers: bool = True
    chunk_size: Optional[int] = None
    workers: int = 1

    def __post_init__(self):
        if self.n_samples < MIN_SAMPLES:
            raise ValueError(f"n_samples must be at least {MIN_SAMPLES}, got {self.n_samples!r}")
        if not self.fd_step > 0:
            raise ValueError(f"fd_step must be positive, got {self.fd_step!r}")
        if self.base_seed < 0:
            raise ValueError(f"base_seed must be non-negative, got {self.base_seed!r}")
        if self.chunk_size is not None and self.chunk_size < MIN_SAMPLES:
            raise ValueError(f"chunk_size must be at least {MIN_SAMPLES}, got {self.chunk_size!r}")
        if self.workers < 1:
            raise ValueError(f"workers must be at least 1, got {self.workers!r}")

    def streams(self, index: int) -> Tuple[int, int, int]:
        """Random streams for (theta, theta+h, theta-h) of grid point `index`."""
        if self.use_common_random_numbers:
            return 3 * index, 3 * index, 3 * index
        return 3 * index, 3 * index + 1, 3 * index + 2


def _central_sums(x: np.ndarray) -> Tuple[int, float, float, float, float]:
    """Count, mean and sums of 2nd/3rd/4th powers of deviations (two passes)."""
    mean = float(x.mean())
    deviation = x - mean
    squared = deviation * deviation
    return (
        x.size,
        mean,
        float(squared.sum()),
        float((squared * deviation).sum()),
        float((squared * squared).sum()),
    )


def estimate_moments(samples) -> OutputMoments:
    """
    Two-pass moment estimates about the sample mean, without bias correction.

    Raises:
        DegenerateDistributionError: fewer than two distinct values
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 2 or float(np.ptp(x)) == 0.0:
        raise DegenerateDistributionError("samples need at least two distinct values")

    n, mean, m2, m3, m4 = _central_sums(x)
    mu2 = m2 / n
    mu3bar, mu4bar = normalize_moments(mean, mu2, m3 / n, m4 / n)
    return OutputMoments(mean, mu2, mu3bar, mu4bar)


class MomentAccumulator:
    """
    Streaming central-moment accumulator that merges whole batches.

    Each batch is summarised with two passes and folded into the running
    totals with the pairwise update formulas, so memory stays bounded by
    the batch size.
    """

    def __init__(self):
        self._count = 0
        self._mean = 0.0
        self._m2 = 0.0
        self._m3 = 0.0
        self._m4 = 0.0
        self._min = math.inf
        self._max = -math.inf

    @property
    def count(self) -> int:
        return self._count

    def add_batch(self, values) -> None:
        x = np.asarray(values, dtype=float).ravel()
        if x.size == 0:
            return
        self._min = min(self._min, float(x.min()))
        self._max = max(self._max, float(x.max()))

        nb, mean_b, m2b, m3b, m4b = _central_sums(x)
        if self._count == 0:
            self._count, self._mean, self._m2, self._m3, self._m4 = nb, mean_b, m2b, m3b, m4b
            return

        na, mean_a, m2a, m3a, m4a = self._count, self._mean, self._m2, self._m3, self._m4
        n = na + nb
        delta = mean_b - mean_a
        delta_n = delta / n

        self._mean = mean_a + delta_n * nb
        self._m4 = (m4a + m4b
                    + delta * delta_n ** 3 * na * nb * (na * na - na * nb + nb * nb)
                    + 6.0 * delta_n ** 2 * (na * na * m2b + nb * nb * m2a)
                    + 4.0 * delta_n * (na * m3b - nb * m3a))
        self._m3 = (m3a + m3b
                    + delta * delta_n ** 2 * na * nb * (na - nb)
                    + 3.0 * delta_n * (na * m2b - nb * m2a))
        self._m2 = m2a + m2b + delta * delta_n * na * nb
        self._count = n

    def moments(self) -> OutputMoments:
        if self._count < 2 or self._max == self._min:
            raise DegenerateDistributionError("samples need at least two distinct values")
        n = self._count
        mu2 = self._m2 / n
        mu3bar, mu4bar = normalize_moments(self._mean, mu2, self._m3 / n, self._m4 / n)
        return OutputMoments(self._mean, mu2, mu3bar, mu4bar)


def iter_base_draws(model: ModelSpec, config: SimConfig, stream: int) -> Iterator[np.ndarray]:
    """Driving noise for one stream, in chunks of config.chunk_size (one chunk when unset)."""
    generator = random_stream(config.base_seed, stream)
    remaining = config.n_samples
    size = config.chunk_size or config.n_samples
    while remaining > 0:
        take = min(size, remaining)
        yield draw_noise(generator, model, take)
        remaining -= take


def _cache_key(theta: float, stream: int) -> Tuple[float, int]:
    return round(theta, 12), stream


def moments_at(model: ModelSpec, thetas: Sequence[float], streams: Sequence[int],
               config: SimConfig, cache: Optional[MomentCache] = None) -> List[OutputMoments]:
    """
    Estimate output moments at several parameter values.

    Values sharing a stream are driven by the same noise draws, which are
    generated once. Results already present in `cache` are reused.
    """
    results: List[Optional[OutputMoments]] = [None] * len(thetas)
    pending: Dict[int, List[int]] = {}
    for position, (theta, stream) in enumerate(zip(thetas, streams)):
        if cache is not None and _cache_key(theta, stream) in cache:
            results[position] = cache[_cache_key(theta, stream)]
            logger.debug("reusing cached moments at theta=%r, stream=%d", theta, stream)
        else:
            pending.setdefault(stream, []).append(position)

    for stream, positions in pending.items():
        accumulators = {position: MomentAccumulator() for position in positions}
        for chunk in iter_base_draws(model, config, stream):
            for position in positions:
                accumulators[position].add_batch(transform(model, thetas[position], chunk))
        for position in positions:
            estimate = accumulators[position].moments()
            results[position] = estimate
            if cache is not None:
                cache[_cache_key(thetas[position], stream)] = estimate

    return results


def _central_difference(plus: OutputMoments, minus: OutputMoments, step: float) -> Tuple[float, float]:
    return (plus.mu1 - minus.mu1) / (2.0 * step), (plus.mu2 - minus.mu2) / (2.0 * step)


def estimate_moment_derivatives(model: ModelSpec, theta: float, config: SimConfig,
                                index: int = 0) -> Tuple[float, float]:
    """Central-difference estimates of (dmu1/dtheta, dmu2/dtheta)."""
    _, plus_stream, minus_stream = config.streams(index)
    h = config.fd_step
    plus, minus = moments_at(model, [theta + h, theta - h], [plus_stream, minus_stream], config)
    return _central_difference(plus, minus, h)


def estimate_point(model: ModelSpec, theta: float, config: SimConfig, index: int = 0,
                   cache: Optional[MomentCache] = None) -> MomentPoint:
    """Measured moments at theta with finite-difference derivatives, as one task."""
    h = config.fd_step
    streams = config.streams(index)
    center, plus, minus = moments_at(model, [theta, theta + h, theta - h], streams, config, cache)
    dmu1, dmu2 = _central_difference(plus, minus, h)
    logger.debug("theta=%r: mu1=%r mu2=%r dmu1=%r dmu2=%r", theta, center.mu1, center.mu2, dmu1, dmu2)
    return center.with_derivatives(theta, dmu1, dmu2)


def fisher_oracle_squaring(theta: float) -> float:
    """
    Exact Fisher information of Z = Y^2 with Y ~ N(theta, 1), by quadrature.

    The output density is (2*pi*z)^-1/2 * exp(-(z + theta^2)/2) * cosh(theta*sqrt(z))
    with score sqrt(z)*tanh(theta*sqrt(z)) - theta. Substituting z = y^2
    removes the singularity at zero:

        F = int_0^inf (y*tanh(theta*y) - theta)^2 * (phi(y - theta) + phi(y + theta)) dy
    """
    if not math.isfinite(theta):
        raise OracleError(f"theta must be finite, got {theta!r}")

    norm = 1.0 / math.sqrt(2.0 * math.pi)

    def integrand(y: float) -> float:
        score = y * math.tanh(theta * y) - theta
        density = norm * (math.exp(-0.5 * (y - theta) ** 2) + math.exp(-0.5 * (y + theta) ** 2))
        return score * score * density

    value, error = _quad(integrand, 0.0, abs(theta) + 12.0, theta)
    logger.debug("squaring oracle theta=%r: F=%r (error estimate %.2e)", theta, value, error)
    return value


def _quad(integrand, lower: float, upper: float, theta: float, points: Optional[Sequence[float]] = None,
          epsabs: float = 1e-14, epsrel: float = 1e-11) -> Tuple[float, float]:
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            return integrate.quad(integrand, lower, upper, points=points,
                                  epsabs=epsabs, epsrel=epsrel, limit=200)
        except integrate.IntegrationWarning as e:
            raise OracleError(f"quadrature did not converge at theta={theta!r}: {e}") from e


def soft_limiter_point_quadrature(theta: float, zeta: float) -> MomentPoint:
    """
    Soft-limiter moments and moment derivatives by quadrature over the
    Gaussian input, Y ~ N(theta, 1).

    Raw moments m_k = E[g(Y)^k] and their slopes E[g(Y)^k (Y - theta)]
    are integrated on theta +- 12 and converted to central moments.
    """
    if not math.isfinite(theta):
        raise OracleError(f"theta must be finite, got {theta!r}")
    if not zeta > 0:
        raise ParameterDomainError(f"soft-limiter saturation zeta must be positive, got {zeta!r}")

    norm = 1.0 / math.sqrt(2.0 * math.pi)
    lower, upper = theta - 12.0, theta + 12.0
    points = [0.0] if lower < 0.0 < upper else None

    raw, slopes = [], []
    for k in range(1, 5):
        def moment(y: float, k=k) -> float:
            return float(soft_limiter_transfer(y, zeta)) ** k * norm * math.exp(-0.5 * (y - theta) ** 2)

        def slope(y: float, k=k) -> float:
            return moment(y) * (y - theta)

        raw.append(_quad(moment, lower, upper, theta, points, epsabs=1e-10, epsrel=1e-9)[0])
        slopes.append(_quad(slope, lower, upper, theta, points, epsabs=1e-10, epsrel=1e-9)[0])

    m1, m2, m3, m4 = raw
    mu2 = m2 - m1 * m1
    mu3 = m3 - 3.0 * m1 * m2 + 2.0 * m1 ** 3
    mu4 = m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * m1 ** 4
    dmu1 = slopes[0]
    dmu2 = slopes[1] - 2.0 * m1 * dmu1
    return MomentPoint.from_central(theta, m1, mu2, mu3, mu4, dmu1, dmu2)


def _outcome_frequencies(model: ModelSpec, theta: float, config: SimConfig,
                         stream: int, outcomes: np.ndarray) -> np.ndarray:
    counts = np.zeros(outcomes.size)
    for chunk in iter_base_draws(model, config, stream):
        z = transform(model, theta, chunk)
        counts += np.array([np.count_nonzero(z == outcome) for outcome in outcomes])
    return counts / config.n_samples


def empirical_fisher_check(model: ModelSpec, theta: float, config: SimConfig, index: int = 0) -> float:
    """
    Sample-based F for finite-alphabet outputs: sum over outcomes of
    (dp/dtheta)^2 / p with frequencies from central differences.
    """
    if not model.has_finite_alphabet:
        raise ParameterDomainError(f"{model.label()} does not have a finite output alphabet")

    if model.kind is ModelKind.HARD_LIMITED_GAUSSIAN:
        outcomes = np.array([-1.0, 1.0])
    else:
        outcomes = np.array([0.0, 1.0])
    h = config.fd_step
    center_stream, plus_stream, minus_stream = config.streams(index)

    p_center = _outcome_frequencies(model, theta, config, center_stream, outcomes)
    p_plus = _outcome_frequencies(model, theta + h, config, plus_stream, outcomes)
    p_minus = _outcome_frequencies(model, theta - h, config, minus_stream, outcomes)

    if np.any(p_center == 0.0):
        raise InsufficientSamplesError(
            f"{model.label()} at theta={theta!r}: an output cell is empty with {config.n_samples} samples"
        )

    slopes = (p_plus - p_minus) / (2.0 * h)
    return float(np.sum(slopes * slopes / p_center))
