import math

import pytest

from kppspeed import coeffs

TWO_PI = 2.0 * math.pi


@pytest.fixture(scope="session")
def exact_pair():
    """The calculable pair: d = 1/(1 - 0.5 sin x), r = 1 + 0.5 sin x, L = 2*pi."""
    d = coeffs.parse_coefficient("1/(1 - 0.5*sin(x))", TWO_PI, 256)
    r = coeffs.parse_coefficient("1 + 0.5*sin(x)", TWO_PI, 256)
    return d, r


@pytest.fixture(scope="session")
def unit_pair():
    d = coeffs.parse_coefficient("1", TWO_PI, 256)
    r = coeffs.parse_coefficient("1", TWO_PI, 256)
    return d, r
