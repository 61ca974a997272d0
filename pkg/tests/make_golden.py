"""Regenerate golden_fixture.json from the independent oracles only.

Run from the repository root:  python3 -m tests.make_golden
"""

import json
import math
from pathlib import Path

import numpy as np
from scipy import optimize, stats

from catscheme.synthetic import fixture_bundle

from . import oracles

OUT = Path(__file__).with_name("golden_fixture.json")
EPS1, EPS2 = 0.01, 0.02


def nb_mle(counts):
    x = np.asarray(counts, float)
    nll = lambda lr: -np.sum(stats.nbinom.logpmf(x, math.exp(lr), math.exp(lr) / (math.exp(lr) + x.mean())))
    r = math.exp(optimize.minimize_scalar(nll, bounds=(-10, 18), method="bounded",
                                          options={"xatol": 1e-12}).x)
    return r, r / (r + x.mean())


def flood_probs(bundle):
    out = {}
    for m in bundle.municipalities:
        if m.cluster not in bundle.clusters:
            out[m.id] = 0.0
            continue
        size, prob = nb_mle([n for _, c, n in bundle.flood_counts if c == m.cluster])
        mean_flooded, csize = bundle.clusters[m.cluster]
        out[m.id] = (1 - stats.nbinom.pmf(0, size, prob)) * m.p3_extent * mean_flooded / csize
    return out


def main():
    b = fixture_bundle()
    raw = oracles.raw_catalogue()["A.sl"]
    curve = json.loads((Path(__file__).parents[1] / "src/catscheme/data/depth_damage.json").read_text())
    s2 = next(c for c in curve["curves"] if str(c["storeys"]) == "2")
    g = lambda d: min(100.0, max(0.0, float(np.polynomial.polynomial.polyval(d, s2["coefficients"]))))
    shape, _, scale = stats.gamma.fit([d for _, d in b.depths], floc=0)
    rate = 1 / scale
    fp = flood_probs(b)
    ids = [m.id for m in b.municipalities]
    area = {m.id: m.exposure("A.sl") for m in b.municipalities}

    seismic, flood = {}, {}
    for m in b.municipalities:
        h = b.truth["hazards"][m.id]
        seismic[m.id] = oracles.seismic_expectation(lambda l: l, h.alpha, h.beta, raw, m.amplification)
        flood[m.id] = oracles.flood_expectation(lambda l: l, fp[m.id], shape, rate, g, s2["delta_max"])

    # full coverage seismic scheme: D = 0 so every municipality claims with probability one
    p_h = {}
    for m in b.municipalities:
        h = b.truth["hazards"][m.id]
        expect = lambda fn: oracles.seismic_expectation(fn, h.alpha, h.beta, raw, m.amplification)
        p_h[m.id], _ = oracles.wtp_from_expectation(expect, 0.0, 1500.0)
    n = len(ids)
    a = [area[i] * seismic[i] for i in ids]
    e_y = sum(a)
    bsum = sum(a)
    phi = bsum / n * math.sqrt(math.log(1 / EPS1) / 2)
    gamma = bsum / n * math.sqrt(math.log(1 / EPS2) / 2)
    sum_p_h = sum(area[i] * p_h[i] for i in ids)
    c = (n * gamma + e_y) / sum_p_h
    sum_p_star = min(c, 1) * sum_p_h
    w_d = max(n * phi + e_y - sum_p_star, 0.0)
    gamma_star = (sum_p_star - e_y) / n
    eps2 = math.exp(-2 * gamma_star ** 2 * n ** 2 / bsum ** 2) if gamma_star > 0 else 1.0
    golden = {
        "seismic_per_sqm": seismic,
        "seismic_national_total": sum(area[i] * seismic[i] for i in ids),
        "flood_prob": fp,
        "flood_per_sqm": flood,
        "flood_national_total": sum(area[i] * flood[i] for i in ids),
        "depth_gamma": [shape, rate],
        "scheme_seismic_full": {
            "p_h": p_h, "sum_p_h": sum_p_h, "e_y": e_y, "phi": phi, "gamma": gamma, "c": c,
            "sum_p_star": sum_p_star, "w_d_star": w_d, "eps1_star": EPS1 if w_d > 0 else None,
            "eps2_star": max(eps2, EPS1), "gamma_star": gamma_star, "n_c": n,
        },
    }
    OUT.write_text(json.dumps(golden, indent=1, sort_keys=True) + "\n")
    print(json.dumps(golden["scheme_seismic_full"], indent=1))


if __name__ == "__main__":
    main()
