import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from catscheme.errors import InputError
from catscheme.geo import SEISMIC_TYPOLOGIES
from catscheme.vulnerability import (DepthDamageCurve, FragilityModel, damage_fraction,
                                     depth_damage, exceedance_matrix, fragility_prob,
                                     invert_depth, load_catalogue, load_depth_damage,
                                     model_loss_fraction)

from . import oracles

ROTA_M = FragilityModel("rota", "M", "seismic", ((-2.03, 0.36), (-1.5, 0.4)))


def test_fragility_median_and_tail():
    assert float(fragility_prob(ROTA_M, 1, math.exp(-2.03))) == pytest.approx(0.5, abs=1e-15)
    assert float(fragility_prob(ROTA_M, 1, 1.0)) == pytest.approx(stats.norm.cdf(2.03 / 0.36), rel=1e-14)
    assert float(fragility_prob(ROTA_M, 3, 0.7)) == 0.0
    with pytest.raises(InputError):
        fragility_prob(ROTA_M, 4, 0.7)
    with pytest.raises(InputError):
        fragility_prob(ROTA_M, 1, 0.0)


def test_damage_fraction_values():
    m4 = FragilityModel("m4", "M", "seismic", ((0, 1),) * 4)
    m3 = FragilityModel("m3", "M", "seismic", ((0, 1),) * 3)
    assert damage_fraction(m4, 4) == 1.0
    assert damage_fraction(m4, 1) == 0.25
    assert damage_fraction(m3, 2, alpha=2.0) == pytest.approx(4 / 9, rel=1e-15)


def test_model_validation():
    with pytest.raises(InputError):
        FragilityModel("x", "M", "seismic", ())
    with pytest.raises(InputError):
        FragilityModel("x", "M", "seismic", ((0.0, 0.0),))


def test_catalogue_contents():
    cat, report = load_catalogue()
    assert set(SEISMIC_TYPOLOGIES) <= set(cat.typologies)
    assert report.n_models == len(cat.models)
    assert not report.stated_mismatches
    assert len(cat.models_for("RC.gl")) == 11 and len(cat.models_for("RC.sl")) == 10
    assert report.ordering_violations and report.lines()
    with pytest.raises(InputError):
        load_catalogue(strict=True)
    with pytest.raises(InputError):
        cat.models_for("S1")


def test_strict_load_accepts_ordered(tmp_path):
    raw = {"models": [{"id": "a", "structure": "M", "load": "seismic",
                       "params": [[-2.0, 0.5], [-1.0, 0.5]]}],
           "typologies": {"M": ["a"]}}
    p = tmp_path / "cat.json"
    p.write_text(json.dumps(raw))
    cat, rep = load_catalogue(p, strict=True)
    assert not rep.ordering_violations
    raw["typologies"]["M"] = ["b"]
    p.write_text(json.dumps(raw))
    with pytest.raises(InputError):
        load_catalogue(p)


@given(st.floats(-6, 2))
def test_envelope_is_ordered_and_loss_matches_oracle(t):
    cat, _ = load_catalogue()
    raw = oracles.raw_catalogue()
    for m in cat.models.values():
        p = exceedance_matrix(m, np.array([t]))
        assert np.all(np.diff(p[:, 0]) <= 0)
    for typ in SEISMIC_TYPOLOGIES:
        got = float(cat.loss_fraction(typ, t))
        assert got == pytest.approx(oracles.loss_fraction(raw[typ], math.exp(t)), abs=1e-13)
        assert 0.0 <= got <= 1.0


def test_loss_curve_monotone_and_limits():
    cat, _ = load_catalogue()
    t = np.linspace(-8, cat.log_pga_upper(), 3001)
    for typ in SEISMIC_TYPOLOGIES:
        v = cat.loss_fraction(typ, t)
        assert np.all(np.diff(v) >= -1e-15)
        assert v[0] < 1e-8 and v[-1] > 1 - 1e-10
        curve = cat.curve(typ, 1500.0)
        tk = curve.log_pga_at(200.0)
        assert float(curve(tk)) == pytest.approx(200.0, abs=1e-8)
        assert curve.log_pga_at(1600.0) is None


def test_model_loss_fraction_alpha():
    m = FragilityModel("a", "M", "seismic", ((0.0, 0.5), (0.5, 0.5)))
    t = np.array([0.25])
    p = [stats.norm.cdf(0.25 / 0.5), stats.norm.cdf(-0.25 / 0.5)]
    want = 0.25 * (p[0] - p[1]) + 1.0 * p[1]
    assert float(model_loss_fraction(m, t, alpha=2.0)[0]) == pytest.approx(want, rel=1e-14)


@pytest.fixture(scope="module")
def curves():
    return load_depth_damage()


def test_depth_damage_shipped(curves):
    assert set(curves) == {"S1", "S2", "S3plus"}
    grid = np.linspace(0, 8, 4001)
    for c in curves.values():
        v = depth_damage(c, grid)
        assert 0 <= v[0] <= 100
        assert np.all(np.diff(v) >= 0) and np.all((v >= 0) & (v <= 100))
        assert float(c(c.delta_max)) == pytest.approx(100.0, abs=1e-9)
        assert np.all(c(grid[grid >= c.delta_max]) == 100.0)
        assert float(c(1.0)) <= float(c(2.0))


def test_depth_damage_clamps_and_fixes_non_monotone():
    wavy = DepthDamageCurve("x", (-10.0, 80.0, -40.0, 6.0), 4.0)
    grid = np.linspace(0, 5, 2001)
    v = wavy(grid)
    assert v[0] == 0.0
    assert np.all(np.diff(v) >= 0) and v.max() <= 100.0
    with pytest.raises(InputError):
        wavy(-1.0)
    assert float(DepthDamageCurve("z", (0.0,), 0.0)(0.0)) == 100.0


def test_invert_depth(curves):
    lin = DepthDamageCurve("l", (0.0, 20.0), 5.0)
    assert invert_depth(lin, 50.0) == pytest.approx(2.5, abs=1e-8)
    for c in curves.values():
        assert invert_depth(c, 100.0) == c.delta_max
        assert invert_depth(c, float(c(0.0))) == 0.0
        d = invert_depth(c, 60.0)
        assert float(c(d)) == pytest.approx(60.0, abs=1e-6)
    with pytest.raises(InputError):
        invert_depth(lin, 120.0)
