import math

import pytest

from bougerol import RngStream

#: significance level shared by the statistical checks
ALPHA = 0.01


@pytest.fixture
def rng() -> RngStream:
    return RngStream(20240801)


def binomial_3se(freq: float, prob: float, n: int) -> bool:
    """|freq - prob| within three binomial standard errors."""
    se = math.sqrt(max(prob * (1.0 - prob), 1e-300) / n)
    return abs(freq - prob) <= 3.0 * se
