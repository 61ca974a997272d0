import numpy as np
import pytest

from catscheme.geo import sample_groupings
from catscheme.hazard import DepthDistribution, PowerLawHazard
from catscheme.pipeline import default_policies, fit_bundle, run_scheme
from catscheme.synthetic import fixture_bundle, generate_portfolio
from catscheme.vulnerability import (DepthDamageCurve, FragilityCatalogue, FragilityModel,
                                     load_catalogue)

ITALY_SEED = 7
ITALY_N = 200


@pytest.fixture(scope="session")
def catalogue():
    return load_catalogue()[0]


@pytest.fixture(scope="session")
def toy_catalogue():
    """One model, one limit state, lognormal(0, 0.5)."""
    m = FragilityModel("toy", "M", "seismic", ((0.0, 0.5),))
    return FragilityCatalogue({"toy": m}, {"M": ("toy",)})


@pytest.fixture(scope="session")
def toy_hazard():
    return PowerLawHazard(0.5, 2.0)


@pytest.fixture(scope="session")
def cubic_curve():
    # g = 10 + 90 (3u - 3u^2 + u^3), u = d / 4
    k = 90.0
    return DepthDamageCurve("2", (10.0, 3 * k / 4, -3 * k / 16, k / 64), 4.0)


@pytest.fixture(scope="session")
def gamma21():
    return DepthDistribution(2.0, 1.0)


@pytest.fixture(scope="session")
def fixture_fitted():
    return fit_bundle(fixture_bundle())


@pytest.fixture(scope="session")
def italy_bundle():
    return generate_portfolio(ITALY_N, 600.0, ITALY_SEED, "italy-like")


@pytest.fixture(scope="session")
def italy_fitted(italy_bundle):
    return fit_bundle(italy_bundle)


@pytest.fixture(scope="session")
def italy_groupings(italy_fitted):
    return sample_groupings(italy_fitted.municipalities, 50.0, 100, ITALY_SEED)


@pytest.fixture(scope="session")
def italy_runs(italy_fitted, italy_groupings):
    """All single-peril and multi-hazard runs on the default policy grid."""
    runs = {}
    for peril in ("seismic", "flood"):
        for pol in default_policies(peril):
            runs[(peril, pol.deductible, pol.max_coverage)] = run_scheme(
                italy_fitted, peril, pol, italy_groupings)
    for pol in default_policies("multi"):
        s = runs[("seismic", pol.deductible, pol.max_coverage)]
        f = runs[("flood", pol.deductible, pol.max_coverage)]
        runs[("multi", pol.deductible, pol.max_coverage)] = run_scheme(
            italy_fitted, "multi", pol, italy_groupings, pricings=s.pricings + f.pricings)
    return runs


ACCEPTANCE_LINES = []


def record(criterion, ok, detail):
    """Register one acceptance line; the caller still asserts ``ok``."""
    ACCEPTANCE_LINES.append(f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}")
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
