"""Reproducible synthetic input bundles."""

from __future__ import annotations

import numpy as np

from .bundle import Bundle
from .errors import InputError
from .geo import EARTH_RADIUS_KM, FLOOD_TYPOLOGIES, SEISMIC_TYPOLOGIES, Municipality
from .hazard import PowerLawHazard

PROFILES = ("italy-like", "uniform", "fixture")

# 50-year exceedance probabilities of the nine published hazard levels.
P50 = np.array([0.81, 0.63, 0.50, 0.39, 0.30, 0.22, 0.10, 0.05, 0.02])
ANNUAL = -np.log1p(-P50) / 50.0

# Building counts (thousands) by seismic typology and by storey class.
SEISMIC_SHARES = np.array([2853.96, 636.92, 1406.21, 260.88, 6975.98])  # RC.gl RC.sl A.gl A.sl M
STOREY_SHARES = np.array([2083.39, 5981.26, 4123.05])  # S1 S2 S3plus

ORIGIN = (42.0, 12.5)
KM_PER_DEG = np.pi * EARTH_RADIUS_KM / 180.0

FLOOD_MEANS = {"A_P1": 11.95, "A_P2": 42.58}


def exceedance_points(h: PowerLawHazard, amplification: float = 1.0) -> list:
    """Nine (pga, annual exceedance) points on the bedrock curve."""
    pga = h.quantile_of_exceedance(ANNUAL)
    return [(float(x), float(lam)) for x, lam in zip(pga, ANNUAL)]


def _alpha_for(pga475, beta):
    return (beta - 1.0) * pga475 ** (beta - 1.0) / 475.0


def _grid_centroids(n, extent_km, rng):
    side = int(np.ceil(np.sqrt(n)))
    step = extent_km / side
    ij = np.array([(i, j) for i in range(side) for j in range(side)])[:n]
    xy = (ij + 0.5) * step + rng.uniform(-0.3, 0.3, size=(n, 2)) * step
    lat = ORIGIN[0] + xy[:, 1] / KM_PER_DEG
    lon = ORIGIN[1] + xy[:, 0] / (KM_PER_DEG * np.cos(np.radians(lat)))
    return lat, lon


def _nb(rng, mean, size, n):
    prob = size / (size + mean)
    return rng.negative_binomial(size, prob, n)


def generate_portfolio(n_municipalities: int, spatial_extent_km: float = 600.0, seed: int = 0,
                       profile: str = "italy-like", noise: float = 0.0) -> Bundle:
    """Deterministic synthetic bundle; ``noise`` perturbs exceedance points multiplicatively."""
    if n_municipalities < 1:
        raise InputError("need at least one municipality")
    if profile not in PROFILES:
        raise InputError(f"unknown profile {profile!r}")
    if profile == "fixture":
        return fixture_bundle()
    if not spatial_extent_km > 0:
        raise InputError("spatial extent must be positive")
    n = n_municipalities
    rng = np.random.default_rng(seed)
    lat, lon = _grid_centroids(n, spatial_extent_km, rng)

    if profile == "italy-like":
        beta = 2.2 + 1.8 * rng.beta(2.0, 3.0, n)
        pga475 = rng.uniform(0.05, 0.3, n)
        amp = 1.0 + 0.4 * rng.beta(2.0, 4.0, n)
        area = rng.lognormal(np.log(4e5), 0.8, n)
        s_mix = rng.dirichlet(SEISMIC_SHARES / SEISMIC_SHARES.sum() * 40.0, n)
        f_mix = rng.dirichlet(STOREY_SHARES / STOREY_SHARES.sum() * 40.0, n)
        cluster = rng.choice(["A_P1", "A_P2", "none"], size=n, p=[0.45, 0.4, 0.15])
        p3 = np.where(cluster == "none", 0.0, rng.beta(0.8, 6.0, n))
        sizes = {"A_P1": 2.5, "A_P2": 5.0}
        mean_flooded = {"A_P1": 6.0, "A_P2": 4.0}
        cluster_size = {"A_P1": 400, "A_P2": 1200}
        depth_shape, depth_rate, n_depths, n_years = 1.8, 1.2, 475, 100
    else:
        beta = rng.uniform(1.5, 4.0, n)
        pga475 = rng.uniform(0.05, 0.3, n)
        amp = rng.uniform(1.0, 1.5, n)
        area = rng.uniform(1e5, 1e6, n)
        s_mix = rng.dirichlet(np.ones(5), n)
        f_mix = rng.dirichlet(np.ones(3), n)
        cluster = rng.choice(["A_P1", "A_P2", "none"], size=n)
        p3 = np.where(cluster == "none", 0.0, rng.uniform(0.0, 0.3, n))
        sizes = {"A_P1": 2.0, "A_P2": 2.0}
        mean_flooded = {"A_P1": 5.0, "A_P2": 5.0}
        cluster_size = {"A_P1": 500, "A_P2": 500}
        depth_shape, depth_rate, n_depths, n_years = 2.0, 1.0, 500, 100

    p2 = np.clip(p3 + rng.uniform(0.0, 0.1, n) * (p3 > 0), 0.0, 1.0)
    width = len(str(n))
    munis, exceed, truth = [], {}, {}
    for i in range(n):
        mid = f"C{i + 1:0{width}d}"
        exposures = {t: float(round(area[i] * s_mix[i, k], 2)) for k, t in enumerate(SEISMIC_TYPOLOGIES)}
        exposures.update({t: float(round(area[i] * f_mix[i, k], 2)) for k, t in enumerate(FLOOD_TYPOLOGIES)})
        munis.append(Municipality(
            id=mid, name=f"Synthetic {i + 1}", centroid_lat=float(round(lat[i], 6)),
            centroid_lon=float(round(lon[i], 6)), cluster=str(cluster[i]),
            p2_index=float(round(p2[i], 6)), p3_extent=float(round(p3[i], 6)),
            amplification=float(round(amp[i], 4)), exposures=exposures,
        ))
        h = PowerLawHazard(float(_alpha_for(pga475[i], beta[i])), float(beta[i]))
        pts = exceedance_points(h)
        if noise > 0:
            pts = [(x, float(min(lam * np.exp(noise * rng.standard_normal()), 0.999))) for x, lam in pts]
        exceed[mid] = pts
        truth[mid] = h

    counts = []
    for year in range(1, n_years + 1):
        for cl in ("A_P1", "A_P2"):
            counts.append((2000 + year, cl, 0))
    draws = {cl: _nb(rng, FLOOD_MEANS[cl], sizes[cl], n_years) for cl in ("A_P1", "A_P2")}
    counts = [(y, cl, int(draws[cl][y - 2001])) for y, cl, _ in counts]
    depth = rng.gamma(depth_shape, 1.0 / depth_rate, n_depths)
    depths = [(f"E{k + 1:04d}", float(round(v, 4)) or 0.0001) for k, v in enumerate(depth)]
    clusters = {cl: (mean_flooded[cl], cluster_size[cl]) for cl in ("A_P1", "A_P2")}
    return Bundle(munis, exceed, counts, depths, clusters,
                  truth={"hazards": truth, "nb_size": sizes, "depth": (depth_shape, depth_rate)})


def fixture_bundle() -> Bundle:
    """Five hand-specified municipalities, pairwise more than 50 km apart.

    Two of them carry a very high seismic hazard so that their claims are
    frequent under a deductible; all seismic exposure is A.sl and all flood
    exposure S2, keeping each municipality to a single fragility model.
    """
    spec = [
        # id, lat, lon, cluster, p3, amp, alpha, beta, area
        ("F1", 42.0, 12.0, "A_P1", 0.20, 1.0, 0.04, 3.0, 1000.0),
        ("F2", 42.6, 12.8, "A_P1", 0.10, 1.2, 0.04, 3.0, 1000.0),
        ("F3", 43.2, 12.0, "A_P2", 0.05, 1.1, 2.0e-4, 2.5, 10.0),
        ("F4", 41.4, 13.0, "A_P1", 0.00, 1.0, 1.0e-4, 2.0, 5.0),
        ("F5", 41.8, 14.0, "none", 0.00, 1.3, 5.0e-5, 3.5, 2.0),
    ]
    munis, exceed, truth = [], {}, {}
    for mid, lat, lon, cl, p3, amp, alpha, beta, area in spec:
        exp = {t: 0.0 for t in SEISMIC_TYPOLOGIES + FLOOD_TYPOLOGIES}
        exp["A.sl"] = area
        exp["S2"] = area
        munis.append(Municipality(mid, f"Fixture {mid}", lat, lon, cl, p3, p3, amp, exp))
        h = PowerLawHazard(alpha, beta)
        exceed[mid] = exceedance_points(h)
        truth[mid] = h
    counts = []
    a1 = [3, 0, 5, 2, 1, 0, 4, 7, 2, 1, 0, 3]
    a2 = [10, 6, 14, 9, 12, 8, 11, 15, 7, 9, 13, 10]
    for k, (x, y) in enumerate(zip(a1, a2)):
        counts.append((2001 + k, "A_P1", x))
        counts.append((2001 + k, "A_P2", y))
    dvals = [0.3, 0.5, 0.8, 1.0, 1.2, 1.5, 0.4, 2.2, 0.9, 1.7, 0.6, 3.1]
    depths = [(f"E{k + 1:02d}", v) for k, v in enumerate(dvals)]
    clusters = {"A_P1": (2.0, 10), "A_P2": (3.0, 20)}
    return Bundle(munis, exceed, counts, depths, clusters, truth={"hazards": truth})
