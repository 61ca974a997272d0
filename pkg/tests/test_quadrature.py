import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from catscheme.errors import NumericError
from catscheme.quadrature import integrate


@pytest.mark.parametrize("f,a,b,exact", [
    (np.sin, 0.0, math.pi, 2.0),
    (np.exp, -1.0, 2.0, math.e ** 2 - math.exp(-1)),
    (lambda x: 1 / (1 + x * x), -50.0, 50.0, 2 * math.atan(50.0)),
    (lambda x: np.sqrt(np.abs(x)), -1.0, 1.0, 4 / 3),
])
def test_known_integrals(f, a, b, exact):
    r = integrate(f, a, b, points=(0.0,) if a < 0 < b else ())
    assert r.value == pytest.approx(exact, rel=1e-10)
    assert r.apply(f(r.nodes)) == pytest.approx(r.value, rel=1e-14)


def test_kink_breakpoint_is_exact():
    f = lambda x: np.clip(x - 0.3, 0, 0.5)
    r = integrate(f, 0.0, 1.0, points=(0.3, 0.8))
    exact = 0.5 * 0.25 + 0.5 * 0.2
    assert r.value == pytest.approx(exact, rel=1e-14)
    assert r.n_panels == 3


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 9), st.floats(0.1, 5))
def test_polynomials_are_exact(k, b):
    r = integrate(lambda x: x ** k, 0.0, b)
    assert r.value == pytest.approx(b ** (k + 1) / (k + 1), rel=1e-13)


def test_empty_interval_and_errors():
    assert integrate(np.sin, 1.0, 1.0).value == 0.0
    with pytest.raises(NumericError), np.errstate(divide="ignore"):
        integrate(lambda x: 1 / (x - 0.5), 0.0, 1.0)
    with pytest.raises(NumericError):
        integrate(lambda x: np.where(x > 0.5, np.nan, 1.0), 0.0, 1.0)
