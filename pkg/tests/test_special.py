import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from torinfo.special import digamma, digamma_array

EULER_GAMMA = float(mpmath.euler)


def test_digamma_one():
    assert digamma(1) == pytest.approx(-EULER_GAMMA, abs=1e-14)
    assert EULER_GAMMA == pytest.approx(0.5772156649015329, abs=1e-16)


def test_recurrence_identity():
    assert abs((digamma(2) - digamma(1)) - 1.0) < 1e-14


def test_large_argument():
    assert abs(digamma(1e6) - (math.log(1e6) - 5e-7)) < 1e-10


@pytest.mark.parametrize("x", [1e-3, 0.1, 0.5, 1.5, 3, 9.99, 10, 10.5, 57, 1e4, 1e8])
def test_against_mpmath(x):
    assert digamma(x) == pytest.approx(float(mpmath.digamma(x)), rel=1e-13, abs=1e-13)


@given(st.floats(0.01, 1e6))
def test_recurrence_property(x):
    assert digamma(x + 1) - digamma(x) == pytest.approx(1 / x, rel=1e-10, abs=1e-12)


def test_array_matches_scalar():
    x = np.array([[1, 2, 3], [3, 2, 40]], dtype=float)
    out = digamma_array(x)
    assert out.shape == x.shape
    assert all(out.flat[i] == digamma(v) for i, v in enumerate(x.flat))


@pytest.mark.parametrize("bad", [0.0, -1.0, float("nan"), float("inf")])
def test_domain(bad):
    with pytest.raises(ValueError):
        digamma(bad)
    with pytest.raises(ValueError):
        digamma_array([1.0, bad])
