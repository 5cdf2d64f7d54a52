"""Shared pytest fixtures and hypothesis profile."""

import os
import sys

import numpy as np
import pytest
from hypothesis import settings, strategies as st

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from src.moments import MomentPoint  # noqa: E402
from src.montecarlo import SimConfig  # noqa: E402

settings.register_profile("fisherbound", max_examples=200, deadline=None)
settings.load_profile("fisherbound")


@st.composite
def discrete_moment_points(draw, support_size: int = 5):
    """Moments of a random finite discrete distribution plus random derivatives."""
    support = draw(st.lists(st.floats(-10.0, 10.0), min_size=support_size, max_size=support_size))
    weights = draw(st.lists(st.floats(0.05, 1.0), min_size=support_size, max_size=support_size))
    dmu1 = draw(st.floats(-3.0, 3.0).filter(lambda v: abs(v) > 1e-3))
    dmu2 = draw(st.floats(-3.0, 3.0).filter(lambda v: abs(v) > 1e-3))

    x = np.asarray(support)
    p = np.asarray(weights) / np.sum(weights)
    mu1 = float(p @ x)
    deviation = x - mu1
    mu2 = float(p @ deviation ** 2)
    if mu2 < 1e-3:
        x = x + np.arange(support_size)
        mu1 = float(p @ x)
        deviation = x - mu1
        mu2 = float(p @ deviation ** 2)
    return MomentPoint.from_central(0.0, mu1, mu2, float(p @ deviation ** 3), float(p @ deviation ** 4), dmu1, dmu2)


@pytest.fixture
def quick_config():
    """Small Monte-Carlo runs for unit tests."""
    return SimConfig(n_samples=200_000, base_seed=7)
