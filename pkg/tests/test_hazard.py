import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from catscheme.errors import FitError, InputError
from catscheme.hazard import (DepthDistribution, FloodFrequency, PowerLawHazard, fit_depth_gamma,
                              fit_flood_frequency, fit_power_law, pga_density,
                              prob_at_least_one_flood)


def test_exact_power_law_recovery():
    pga = np.geomspace(0.05, 1.0, 9)
    h = fit_power_law(list(zip(pga, 0.01 * pga ** -1.5)))
    assert h.alpha == pytest.approx(0.015, rel=1e-9)
    assert h.beta == pytest.approx(2.5, rel=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-5, 0.5), st.floats(1.3, 4.5))
def test_power_law_round_trip(alpha, beta):
    h = PowerLawHazard(alpha, beta)
    pga = np.geomspace(h.pga_min * 1.5, h.pga_min * 50, 9)
    lam = h.exceedance(pga)
    if np.any(lam >= 1):
        return
    f = fit_power_law(list(zip(pga, lam)))
    assert f.alpha == pytest.approx(alpha, rel=1e-9)
    assert f.beta == pytest.approx(beta, rel=1e-9)


def test_pga_min_formula():
    assert PowerLawHazard(0.001, 2.0).pga_min == pytest.approx(0.001, rel=1e-12)
    h = PowerLawHazard(0.02, 2.7)
    assert h.pga_min == pytest.approx(math.exp(math.log(0.02 / 1.7) / 1.7), rel=1e-12)
    assert h.exceedance(h.pga_min) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("alpha,beta,s", [(0.001, 2.0, 1.0), (0.015, 2.5, 1.0), (0.03, 3.2, 2.0)])
def test_density_integrates_to_one(alpha, beta, s):
    h = PowerLawHazard(alpha, beta)
    lo = s * h.pga_min
    v, _ = integrate.quad(lambda x: float(pga_density(h, x, s)), lo, np.inf, epsabs=0, epsrel=1e-12)
    assert v == pytest.approx(1.0, abs=1e-9)


def test_density_values():
    h = PowerLawHazard(0.015, 2.5)
    assert float(pga_density(h, h.pga_min)) == pytest.approx(0.015 * h.pga_min ** -2.5, rel=1e-12)
    assert float(pga_density(h, h.pga_min * 0.9)) == 0.0
    with pytest.raises(InputError):
        pga_density(h, 0.1, 0.0)


@pytest.mark.parametrize("a,b", [(0.0, 2.0), (0.01, 1.0), (-1.0, 3.0)])
def test_hazard_validation(a, b):
    with pytest.raises(InputError):
        PowerLawHazard(a, b)


def test_fit_rejects_bad_points():
    with pytest.raises(FitError):
        fit_power_law([(0.1, 0.1), (0.2, 0.05)])
    with pytest.raises(FitError):
        fit_power_law([(0.1, 0.1), (0.2, 0.2), (0.3, 0.3)])
    with pytest.raises(FitError):
        fit_power_law([(0.1, 1.0), (0.2, 0.2), (0.3, 0.1)])


def _ff(p0, mean_flooded, size):
    # NB with size 1 has f(0) = prob
    return FloodFrequency(1.0, p0, mean_flooded, size)


def test_prob_at_least_one_flood():
    ff = _ff(0.5, 10, 100)
    assert prob_at_least_one_flood(ff, 0.2) == pytest.approx(0.01, rel=1e-12)
    assert prob_at_least_one_flood(ff, 0.0) == 0.0
    ff = FloodFrequency(3.0, 0.9 ** (1 / 3), 5, 100)
    assert stats.nbinom.pmf(0, 3.0, 0.9 ** (1 / 3)) == pytest.approx(0.9, rel=1e-12)
    assert prob_at_least_one_flood(ff, 1.0) == pytest.approx(0.005, rel=1e-12)
    with pytest.raises(InputError):
        prob_at_least_one_flood(ff, 1.5)


def test_nb_recovery():
    x = stats.nbinom.rvs(5, 0.3, size=10_000, random_state=np.random.default_rng(1))
    size, prob = fit_flood_frequency(x)
    assert size == pytest.approx(5, rel=0.05)
    assert prob == pytest.approx(0.3, rel=0.05)


def test_nb_poisson_limit_keeps_mean():
    x = np.random.default_rng(2).poisson(11.95, size=2000)
    size, prob = fit_flood_frequency(x)
    assert size > 100
    assert size * (1 - prob) / prob == pytest.approx(x.mean(), rel=1e-9)


def test_nb_mean_matches_sample_mean():
    x = stats.nbinom.rvs(2.5, 2.5 / (2.5 + 11.95), size=500, random_state=np.random.default_rng(3))
    size, prob = fit_flood_frequency(x)
    assert size * (1 - prob) / prob == pytest.approx(x.mean(), rel=1e-9)


@pytest.mark.parametrize("counts", [[1] * 5, [0] * 12, [1, -1] * 6, [0.5] * 12])
def test_nb_rejects(counts):
    with pytest.raises(FitError):
        fit_flood_frequency(counts)


def test_gamma_recovery_and_gof():
    x = np.random.default_rng(4).gamma(2.0, 1.0, size=10_000)
    d = fit_depth_gamma(x)
    assert d.shape == pytest.approx(2.0, rel=0.05)
    assert d.rate == pytest.approx(1.0, rel=0.05)
    assert 0 <= d.sse < 1 and 0 <= d.sae < 2
    ref = stats.gamma.fit(x, floc=0)
    assert d.shape == pytest.approx(ref[0], rel=1e-6)


def test_gamma_distribution_functions():
    d = DepthDistribution(2.0, 1.0)
    assert float(d.cdf(np.inf)) == 1.0
    assert float(d.cdf(1.3) + d.sf(1.3)) == pytest.approx(1.0, abs=1e-15)
    assert float(d.cdf(d.ppf(0.37))) == pytest.approx(0.37, rel=1e-12)
    assert float(d.pdf(1.0)) == pytest.approx(math.exp(-1.0), rel=1e-12)


def test_gamma_rejects():
    with pytest.raises(FitError):
        fit_depth_gamma([1.0] * 3)
    with pytest.raises(FitError):
        fit_depth_gamma([1.0] * 20)
    with pytest.raises(InputError):
        fit_depth_gamma([1.0] * 19 + [0.0])
