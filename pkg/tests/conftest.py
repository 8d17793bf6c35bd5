"""Shared fixtures for the test suite.

The `toy` instance is the 3-measurement line-fit used throughout: constant
regressor, y = [0, 0, 4], so the all-in least-squares fit is x = 4/3 and
rejecting index 2 gives the exact fit x = 0.  With inlier threshold 2.58 the
per-outlier-penalty objective prefers rejecting index 2, while the matching
consensus/trimmed formulations keep everything — the smallest instance on
which the formulations genuinely disagree.
"""

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from robest.linear import LinearProblem

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture
def toy():
    return LinearProblem(np.ones(3), np.array([0.0, 0.0, 4.0]))
