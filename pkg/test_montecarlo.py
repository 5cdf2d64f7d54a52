#!/usr/bin/env python3
"""
Tests for sample moment estimation, CRN finite differences, the squaring
oracle and the empirical Fisher check.
"""

import math

import numpy as np
import pytest

from src.bound import fisher_bound
from src.errors import (
    DegenerateDistributionError,
    InsufficientSamplesError,
    ParameterDomainError,
)
from src.models import ModelKind, ModelSpec, exact_fisher, model_moments
from src.moments import FEASIBILITY_TOLERANCE
from src.montecarlo import (
    MomentAccumulator,
    SimConfig,
    empirical_fisher_check,
    estimate_moment_derivatives,
    estimate_moments,
    estimate_point,
    fisher_oracle_squaring,
    moments_at,
    soft_limiter_point_quadrature,
)

HARD_LIMITER = ModelSpec(ModelKind.HARD_LIMITED_GAUSSIAN, gamma=0.0)
SOFT_LIMITER = ModelSpec(ModelKind.SOFT_LIMITER_GAUSSIAN, zeta=0.5)


def test_estimate_moments_two_points():
    moments = estimate_moments([0.0, 2.0])
    assert (moments.mu1, moments.mu2, moments.mu3bar, moments.mu4bar) == (1.0, 1.0, 0.0, 1.0)


@pytest.mark.parametrize("samples", [[1.0, 1.0, 1.0], [3.0], []])
def test_estimate_moments_rejects_degenerate_samples(samples):
    with pytest.raises(DegenerateDistributionError):
        estimate_moments(samples)


def test_gaussian_sample_kurtosis():
    n = 1_000_000
    draws = np.random.Generator(np.random.Philox(5)).standard_normal(n)
    assert abs(estimate_moments(draws).mu4bar - 3.0) <= 3.0 * math.sqrt(24.0 / n)


def test_accumulator_matches_two_pass_estimate():
    values = np.random.default_rng(9).exponential(2.0, 100_003) + 1e3
    accumulator = MomentAccumulator()
    for batch in np.array_split(values, 7):
        accumulator.add_batch(batch)
    streamed = accumulator.moments()
    direct = estimate_moments(values)
    assert accumulator.count == values.size
    for field in ("mu1", "mu2", "mu3bar", "mu4bar"):
        assert getattr(streamed, field) == pytest.approx(getattr(direct, field), rel=1e-9)


def test_accumulator_rejects_constant_stream():
    accumulator = MomentAccumulator()
    accumulator.add_batch(np.ones(10))
    accumulator.add_batch(np.ones(5))
    with pytest.raises(DegenerateDistributionError):
        accumulator.moments()


@pytest.mark.parametrize("kwargs", [
    {"n_samples": 10},
    {"fd_step": 0.0},
    {"base_seed": -1},
    {"chunk_size": 5},
    {"workers": 0},
])
def test_sim_config_validation(kwargs):
    with pytest.raises(ValueError):
        SimConfig(**kwargs)


def test_crn_streams():
    assert SimConfig().streams(4) == (12, 12, 12)
    assert SimConfig(use_common_random_numbers=False).streams(4) == (12, 13, 14)


def test_chunked_estimates_agree(quick_config):
    chunked = SimConfig(n_samples=quick_config.n_samples, base_seed=quick_config.base_seed, chunk_size=30_000)
    whole = estimate_point(SOFT_LIMITER, 0.3, quick_config)
    parts = estimate_point(SOFT_LIMITER, 0.3, chunked)
    assert parts.mu2 == pytest.approx(whole.mu2, rel=1e-9)
    assert parts.dmu1 == pytest.approx(whole.dmu1, rel=1e-6)


def test_estimates_are_reproducible(quick_config):
    assert estimate_point(SOFT_LIMITER, 0.2, quick_config, index=3) == estimate_point(
        SOFT_LIMITER, 0.2, quick_config, index=3)


def test_moment_cache_reuse(quick_config):
    cache = {}
    first = moments_at(SOFT_LIMITER, [0.1, 0.2], [0, 0], quick_config, cache)
    assert len(cache) == 2
    again = moments_at(SOFT_LIMITER, [0.2], [0], quick_config, cache)
    assert again[0] is first[1]


def test_gaussian_location_derivative():
    dmu1, _ = estimate_moment_derivatives(ModelSpec(ModelKind.GAUSSIAN_LOC_SCALE), 0.5, SimConfig())
    assert dmu1 == pytest.approx(1.0, abs=0.01)


def test_soft_limiter_variance_derivative_vanishes_at_origin():
    _, dmu2 = estimate_moment_derivatives(SOFT_LIMITER, 0.0, SimConfig())
    assert abs(dmu2) <= 0.02


def test_soft_limiter_mean_and_slope_match_closed_form():
    point = estimate_point(SOFT_LIMITER, 0.4, SimConfig())
    spread = math.sqrt(1.0 + 0.5 ** 2)
    assert point.mu1 == pytest.approx(2.0 * 0.5 * math.erfc(-0.4 / spread / math.sqrt(2.0)) - 1.0, abs=0.005)
    slope = 2.0 * math.exp(-0.5 * (0.4 / spread) ** 2) / math.sqrt(2.0 * math.pi) / spread
    assert point.dmu1 == pytest.approx(slope, abs=0.02)


def test_crn_reduces_derivative_noise():
    def spread(crn):
        slopes = []
        for seed in range(20):
            config = SimConfig(n_samples=20_000, base_seed=seed, use_common_random_numbers=crn)
            slopes.append(estimate_point(SOFT_LIMITER, 0.3, config).dmu1)
        return np.std(slopes)

    assert spread(True) < spread(False)


@pytest.mark.parametrize("theta", [0.0, 0.3, 1.0])
def test_estimated_points_are_pearson_feasible(quick_config, theta):
    for model in (SOFT_LIMITER, HARD_LIMITER, ModelSpec(ModelKind.SQUARING_GAUSSIAN)):
        assert estimate_point(model, theta, quick_config).slack >= -FEASIBILITY_TOLERANCE


def test_squaring_oracle_vanishes_at_origin():
    assert fisher_oracle_squaring(0.0) == pytest.approx(0.0, abs=1e-12)


def test_squaring_oracle_dominates_bound():
    model = ModelSpec(ModelKind.SQUARING_GAUSSIAN)
    assert fisher_oracle_squaring(1.0) >= 38.0 / 53.0
    for theta in np.linspace(0.0, 2.0, 41):
        assert fisher_bound(model_moments(model, theta)).s_value <= fisher_oracle_squaring(theta) + 1e-6


def test_squaring_oracle_tends_to_input_information():
    # Far from the origin the sign of Y is almost surely known, so Z retains nearly all of F_Y = 1.
    assert fisher_oracle_squaring(6.0) == pytest.approx(1.0, abs=1e-4)


def test_empirical_fisher_bernoulli():
    estimate = empirical_fisher_check(ModelSpec(ModelKind.BERNOULLI), 0.5, SimConfig())
    assert estimate == pytest.approx(4.0, rel=0.05)


def test_empirical_fisher_requires_finite_alphabet(quick_config):
    with pytest.raises(ParameterDomainError):
        empirical_fisher_check(ModelSpec(ModelKind.EXPONENTIAL), 1.0, quick_config)


def test_empirical_fisher_empty_cell():
    config = SimConfig(n_samples=1000)
    with pytest.raises(InsufficientSamplesError):
        empirical_fisher_check(ModelSpec(ModelKind.HARD_LIMITED_GAUSSIAN, gamma=10.0), 0.0, config)


@pytest.mark.slow
def test_hard_limiter_slope_at_origin():
    dmu1, _ = estimate_moment_derivatives(HARD_LIMITER, 0.0, SimConfig(n_samples=10_000_000))
    assert dmu1 == pytest.approx(math.sqrt(2.0 / math.pi), abs=0.02)


@pytest.mark.slow
@pytest.mark.parametrize("theta", [0.0, 0.5, 1.0])
def test_empirical_fisher_hard_limiter(theta):
    config = SimConfig(n_samples=10_000_000)
    estimate = empirical_fisher_check(HARD_LIMITER, theta, config)
    assert estimate == pytest.approx(exact_fisher(HARD_LIMITER, theta), rel=0.05)
    if theta == 0.0:
        assert estimate == pytest.approx(2.0 / math.pi, abs=0.02)


@pytest.mark.parametrize("seed", range(10))
def test_hard_limiter_estimate_uses_unoptimized_bound(seed):
    point = estimate_point(HARD_LIMITER, 0.0, SimConfig(n_samples=1_000_000, base_seed=seed))
    result = fisher_bound(point)
    assert result.beta_star == 0.0
    assert result.s_value == pytest.approx(point.dmu1 ** 2 / point.mu2, rel=1e-12)
    assert result.s_value == pytest.approx(2.0 / math.pi, rel=0.1)


def test_soft_limiter_quadrature_matches_closed_forms():
    origin = soft_limiter_point_quadrature(0.0, 0.5)
    assert origin.mu1 == pytest.approx(0.0, abs=1e-10)
    assert origin.mu2 == pytest.approx(2.0 / math.pi * math.asin(1.0 / 1.25), rel=1e-8)
    assert origin.dmu1 == pytest.approx(2.0 / math.sqrt(2.0 * math.pi * 1.25), rel=1e-8)
    assert origin.dmu2 == pytest.approx(0.0, abs=1e-9)

    shifted = soft_limiter_point_quadrature(0.7, 0.5)
    assert shifted.mu1 == pytest.approx(math.erf(0.7 / math.sqrt(2.0 * 1.25)), rel=1e-8)


def test_soft_limiter_quadrature_agrees_with_simulation():
    exact = soft_limiter_point_quadrature(0.4, 0.5)
    measured = estimate_point(SOFT_LIMITER, 0.4, SimConfig())
    assert measured.mu2 == pytest.approx(exact.mu2, rel=0.01)
    assert measured.dmu1 == pytest.approx(exact.dmu1, abs=0.02)
