#!/usr/bin/env python3
"""
Tests for the model zoo: closed-form moments, exact Fisher information,
tightness of the bound and the deterministic samplers.
"""

import math

import numpy as np
import pytest

from src.bound import fisher_bound
from src.errors import ParameterDomainError, UnsupportedAnalyticError
from src.models import (
    FunctionMap,
    ModelKind,
    ModelSpec,
    PolynomialMap,
    base_draws,
    exact_fisher,
    model_moments,
    q_function,
    sample,
    soft_limiter_transfer,
)
from src.montecarlo import estimate_moments

WIDENING = PolynomialMap((1.0, 0.0, 1.0))

TIGHT_MODELS = [
    (ModelSpec(ModelKind.GAUSSIAN_LOC_SCALE), np.linspace(-2.0, 2.0, 50)),
    (ModelSpec(ModelKind.GAUSSIAN_LOC_SCALE, variance_map=WIDENING), np.linspace(-2.0, 2.0, 50)),
    (ModelSpec(ModelKind.EXPONENTIAL), np.linspace(0.1, 10.0, 50)),
    (ModelSpec(ModelKind.BERNOULLI), np.linspace(0.05, 0.95, 50)),
    (ModelSpec(ModelKind.POISSON), np.linspace(0.1, 10.0, 50)),
    (ModelSpec(ModelKind.HARD_LIMITED_GAUSSIAN, gamma=0.0), np.linspace(-2.0, 2.0, 50)),
    (ModelSpec(ModelKind.HARD_LIMITED_GAUSSIAN, gamma=0.5), np.linspace(-2.0, 2.0, 50)),
]


def test_polynomial_map():
    quadratic = PolynomialMap((1.0, -2.0, 3.0))
    assert quadratic.value(2.0) == 9.0
    assert quadratic.derivative(2.0) == 10.0
    assert PolynomialMap.identity().derivative(5.0) == 1.0
    assert PolynomialMap.constant(4.0).derivative(1.0) == 0.0


def test_function_map_drives_model():
    model = ModelSpec(ModelKind.EXPONENTIAL, mean_map=FunctionMap(math.exp, math.exp))
    point = model_moments(model, 0.0)
    assert point.mu1 == 1.0
    assert exact_fisher(model, 0.0) == pytest.approx(1.0)


def test_q_function():
    assert q_function(0.0) == 0.5
    assert q_function(1.0) + q_function(-1.0) == pytest.approx(1.0, rel=1e-15)
    np.testing.assert_allclose(q_function(np.array([0.0, 0.0])), [0.5, 0.5])


def test_soft_limiter_transfer_saturates():
    z = soft_limiter_transfer(np.array([-5.0, 0.0, 5.0]), 0.1)
    np.testing.assert_allclose(z, [-1.0, 0.0, 1.0], atol=1e-12)


def test_gaussian_location_moments():
    point = model_moments(ModelSpec(ModelKind.GAUSSIAN_LOC_SCALE), 0.7)
    assert (point.mu1, point.mu2, point.mu3bar, point.mu4bar, point.dmu1, point.dmu2) == (0.7, 1.0, 0.0, 3.0, 1.0, 0.0)


def test_squaring_moments():
    point = model_moments(ModelSpec(ModelKind.SQUARING_GAUSSIAN), 1.0)
    assert point.mu1 == pytest.approx(2.0)
    assert point.mu2 == pytest.approx(6.0)
    assert point.mu3bar == pytest.approx(8.0 * math.sqrt(2.0) * 3.0 ** -1.5, rel=1e-12)
    assert point.mu4bar == pytest.approx(60.0 / 9.0 + 3.0, rel=1e-12)
    assert (point.dmu1, point.dmu2) == (2.0, 8.0)


def test_bernoulli_moments():
    point = model_moments(ModelSpec(ModelKind.BERNOULLI), 0.3)
    assert point.mu1 == pytest.approx(0.3)
    assert point.mu2 == pytest.approx(0.21)
    assert point.mu3bar == pytest.approx(0.4 / math.sqrt(0.21), rel=1e-12)
    assert point.mu4bar == pytest.approx(1.0 / 0.21 - 3.0, rel=1e-12)
    assert point.dmu1 == 1.0
    assert point.dmu2 == pytest.approx(0.4)


def test_exponential_kurtosis():
    point = model_moments(ModelSpec(ModelKind.EXPONENTIAL), 2.0)
    assert (point.mu3bar, point.mu4bar) == (2.0, 9.0)


@pytest.mark.parametrize("model, theta, expected", [
    (ModelSpec(ModelKind.EXPONENTIAL), 2.0, 0.25),
    (ModelSpec(ModelKind.BERNOULLI), 0.5, 4.0),
    (ModelSpec(ModelKind.HARD_LIMITED_GAUSSIAN), 0.0, 2.0 / math.pi),
    (ModelSpec(ModelKind.LAPLACE_SCALE), 1.0, 1.0),
    (ModelSpec(ModelKind.POISSON), 4.0, 0.25),
])
def test_exact_fisher(model, theta, expected):
    assert exact_fisher(model, theta) == pytest.approx(expected, rel=1e-12)


def test_exact_fisher_absent_without_closed_form():
    assert exact_fisher(ModelSpec(ModelKind.SQUARING_GAUSSIAN), 1.0) is None
    assert exact_fisher(ModelSpec(ModelKind.SOFT_LIMITER_GAUSSIAN, zeta=0.5), 1.0) is None


@pytest.mark.parametrize("model, grid", TIGHT_MODELS, ids=lambda v: v.label() if isinstance(v, ModelSpec) else "")
def test_bound_is_tight(model, grid):
    for theta in grid:
        s_value = fisher_bound(model_moments(model, theta)).s_value
        assert s_value == pytest.approx(exact_fisher(model, theta), rel=1e-9)


def test_laplace_bound_is_four_fifths():
    model = ModelSpec(ModelKind.LAPLACE_SCALE)
    for theta in np.linspace(0.1, 10.0, 50):
        ratio = fisher_bound(model_moments(model, theta)).s_value / exact_fisher(model, theta)
        assert ratio == pytest.approx(0.8, rel=1e-12)


@pytest.mark.parametrize("variance", [0.5, 1.0, 2.0])
def test_gaussian_noise_is_worst_case(variance):
    gaussian = ModelSpec(ModelKind.GAUSSIAN_LOC_SCALE, variance_map=PolynomialMap.constant(variance))
    laplace_location = 2.0 / variance
    assert exact_fisher(gaussian, 0.3) == 1.0 / variance
    assert exact_fisher(gaussian, 0.3) <= laplace_location


@pytest.mark.parametrize("model, theta", [
    (ModelSpec(ModelKind.BERNOULLI), 1.2),
    (ModelSpec(ModelKind.BERNOULLI), 0.0),
    (ModelSpec(ModelKind.EXPONENTIAL), -1.0),
    (ModelSpec(ModelKind.POISSON), 0.0),
    (ModelSpec(ModelKind.GAUSSIAN_LOC_SCALE, variance_map=PolynomialMap((0.0, 1.0))), -1.0),
])
def test_parameter_domain_errors(model, theta):
    with pytest.raises(ParameterDomainError):
        model_moments(model, theta)


def test_soft_limiter_requires_positive_zeta():
    with pytest.raises(ParameterDomainError):
        ModelSpec(ModelKind.SOFT_LIMITER_GAUSSIAN, zeta=0.0)


def test_soft_limiter_has_no_analytic_moments():
    with pytest.raises(UnsupportedAnalyticError):
        model_moments(ModelSpec(ModelKind.SOFT_LIMITER_GAUSSIAN, zeta=0.5), 0.0)


def test_hard_limiter_samples_are_signs():
    z = sample(ModelSpec(ModelKind.HARD_LIMITED_GAUSSIAN), 0.4, 1_000_000, seed=1)
    assert set(np.unique(z)) == {-1.0, 1.0}


def test_sampling_is_deterministic_and_stream_dependent():
    model = ModelSpec(ModelKind.EXPONENTIAL)
    first = sample(model, 2.0, 1000, seed=3, stream=5)
    np.testing.assert_array_equal(first, sample(model, 2.0, 1000, seed=3, stream=5))
    assert not np.array_equal(first, sample(model, 2.0, 1000, seed=3, stream=6))


def test_uniform_draws_avoid_endpoints():
    u = base_draws(ModelSpec(ModelKind.POISSON), 100_000, seed=0)
    assert u.min() > 0.0 and u.max() < 1.0


def test_soft_limiter_sample_mean_is_zero_at_origin():
    n = 10_000_000
    z = sample(ModelSpec(ModelKind.SOFT_LIMITER_GAUSSIAN, zeta=0.5), 0.0, n, seed=11)
    assert abs(z.mean()) <= 4.0 / math.sqrt(n)


def test_squaring_sample_mean():
    n = 10_000_000
    z = sample(ModelSpec(ModelKind.SQUARING_GAUSSIAN), 0.0, n, seed=12)
    assert abs(z.mean() - 1.0) <= 4.0 * math.sqrt(2.0) / math.sqrt(n)


CONSISTENCY_CASES = [
    (ModelSpec(ModelKind.GAUSSIAN_LOC_SCALE), (-1.0, 0.5)),
    (ModelSpec(ModelKind.GAUSSIAN_LOC_SCALE, variance_map=WIDENING), (0.8,)),
    (ModelSpec(ModelKind.EXPONENTIAL), (0.5, 2.0)),
    (ModelSpec(ModelKind.LAPLACE_SCALE), (0.5, 1.5)),
    (ModelSpec(ModelKind.BERNOULLI), (0.2, 0.6)),
    (ModelSpec(ModelKind.POISSON), (0.7, 3.0, 8.0)),
    (ModelSpec(ModelKind.HARD_LIMITED_GAUSSIAN, gamma=0.0), (0.0, 0.8)),
    (ModelSpec(ModelKind.HARD_LIMITED_GAUSSIAN, gamma=0.5), (-0.3,)),
    (ModelSpec(ModelKind.SQUARING_GAUSSIAN), (0.0, 1.0)),
]
MOMENT_FIELDS = ("mu1", "mu2", "mu3bar", "mu4bar")


def moments_with_standard_errors(z, batches=50):
    """Whole-sample moment estimates and their standard errors from batch-to-batch spread."""
    whole = estimate_moments(z)
    parts = [estimate_moments(chunk) for chunk in np.array_split(z, batches)]
    errors = {
        name: float(np.std([getattr(part, name) for part in parts], ddof=1)) / math.sqrt(batches)
        for name in MOMENT_FIELDS
    }
    return whole, errors


def test_consistency_cases_cover_every_analytic_kind():
    covered = {model.kind for model, _ in CONSISTENCY_CASES}
    assert covered == {kind for kind in ModelKind if ModelSpec(kind).is_analytic}


@pytest.mark.parametrize("model, theta", [
    (model, theta) for model, thetas in CONSISTENCY_CASES for theta in thetas
])
def test_sampler_matches_closed_form_moments(model, theta):
    estimate, errors = moments_with_standard_errors(sample(model, theta, 1_000_000, seed=21))
    exact = model_moments(model, theta)
    for name in MOMENT_FIELDS:
        deviation = abs(getattr(estimate, name) - getattr(exact, name))
        assert deviation <= 5.0 * errors[name] + 1e-12, name


@pytest.mark.slow
def test_squaring_shape_at_one():
    model = ModelSpec(ModelKind.SQUARING_GAUSSIAN)
    estimate, errors = moments_with_standard_errors(sample(model, 1.0, 10_000_000, seed=5), batches=100)
    assert abs(estimate.mu3bar - 8.0 * math.sqrt(2.0) * 3.0 ** -1.5) <= 3.0 * errors["mu3bar"]
    assert abs(estimate.mu4bar - (60.0 / 9.0 + 3.0)) <= 3.0 * errors["mu4bar"]
