"""End-to-end orchestration from an input bundle to scheme solutions."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bundle import Bundle
from .errors import InputError
from .geo import DEFAULT_R_KM, FLOOD_TYPOLOGIES, SEISMIC_TYPOLOGIES, sample_groupings
from .hazard import (FloodFrequency, fit_depth_gamma, fit_flood_frequency, fit_power_law,
                     prob_at_least_one_flood)
from .losses import (DEFAULT_RC, ClaimSeverity, FloodLossModel, LossSurface, MultiSeverity,
                     Policy, SeismicLossModel, claim_severities)
from .pricing import DemandQuote, PricingCell, multi_hazard_wtp, solve_wtp
from .scheme import SIMPLIFIED, BoundInputs, aggregate_over_samplings, solve_scheme
from .vulnerability import load_catalogue, load_depth_damage

PERILS = ("seismic", "flood", "multi")
DEFAULT_DEDUCTIBLES = (0.0, 200.0)
DEFAULT_COVERAGES = (1500.0, 1200.0)


def default_policies(peril="seismic"):
    return [Policy(d, e, peril) for d in DEFAULT_DEDUCTIBLES for e in DEFAULT_COVERAGES]


@dataclass
class FittedInputs:
    municipalities: list
    hazards: dict  # id -> PowerLawHazard
    flood_prob: dict  # id -> P(N_F >= 1)
    depth: object = None
    frequencies: dict = field(default_factory=dict)
    dropped: list = field(default_factory=list)
    catalogue: object = None
    load_report: object = None
    curves: dict = field(default_factory=dict)
    rc: float = DEFAULT_RC

    @property
    def ids(self) -> tuple:
        return tuple(m.id for m in self.municipalities)

    @property
    def has_flood(self) -> bool:
        return self.depth is not None


def fit_bundle(bundle: Bundle, rc: float = DEFAULT_RC, catalogue=None, curves=None) -> FittedInputs:
    """Fit hazards; municipalities without exceedance data are dropped."""
    if catalogue is None:
        catalogue, report = load_catalogue()
    else:
        report = None
    hazards, kept, dropped = {}, [], []
    for m in bundle.municipalities:
        pts = bundle.exceedance.get(m.id)
        if not pts:
            dropped.append(m.id)
            continue
        hazards[m.id] = fit_power_law(pts)
        kept.append(m)
    if not kept:
        raise InputError("no municipality has hazard data")
    fitted = FittedInputs(kept, hazards, {}, dropped=dropped, catalogue=catalogue,
                          load_report=report, curves=curves or load_depth_damage(), rc=rc)
    if bundle.has_flood:
        fitted.depth = fit_depth_gamma([d for _, d in bundle.depths])
        for cl, (mean_flooded, size) in sorted(bundle.clusters.items()):
            counts = [n for _, c, n in bundle.flood_counts if c == cl]
            nb_size, nb_prob = fit_flood_frequency(counts)
            fitted.frequencies[cl] = FloodFrequency(nb_size, nb_prob, mean_flooded, size)
        for m in kept:
            ff = fitted.frequencies.get(m.cluster)
            fitted.flood_prob[m.id] = 0.0 if ff is None else prob_at_least_one_flood(ff, m.p3_extent)
    return fitted


def _typologies(peril):
    return SEISMIC_TYPOLOGIES if peril == "seismic" else FLOOD_TYPOLOGIES


def loss_model(fitted: FittedInputs, muni, typology, peril):
    if peril == "seismic":
        return SeismicLossModel(fitted.hazards[muni.id], typology, fitted.catalogue, fitted.rc,
                                muni.amplification)
    return FloodLossModel(fitted.flood_prob[muni.id], fitted.depth, fitted.curves[typology], fitted.rc)


def _require(fitted, peril):
    if peril in ("flood", "multi") and not fitted.has_flood:
        raise InputError("flood inputs missing (flood_counts.csv, depths.csv, flood_clusters.csv)")


def assess(fitted: FittedInputs, peril: str) -> LossSurface:
    if peril not in ("seismic", "flood"):
        raise InputError(f"assessment peril must be seismic or flood, got {peril!r}")
    _require(fitted, peril)
    typs = _typologies(peril)
    n = len(fitted.municipalities)
    per = np.zeros((n, len(typs)))
    expo = np.zeros((n, len(typs)))
    for i, m in enumerate(fitted.municipalities):
        for j, t in enumerate(typs):
            expo[i, j] = m.exposure(t)
            per[i, j] = loss_model(fitted, m, t, peril).distribution().mean
    return LossSurface(fitted.ids, typs, per, expo)


@dataclass
class PolicyPricing:
    policy: Policy
    peril: str
    typologies: tuple
    quotes: dict  # (municipality, typology) -> DemandQuote
    p_h: np.ndarray  # (n, J), zero where unpriced
    expected_reimb: np.ndarray
    exposures: np.ndarray
    severity: ClaimSeverity
    expected_loss: np.ndarray

    @property
    def sum_p_h(self) -> float:
        priced = np.array([[self.quotes.get((mid, t)) is not None and self.quotes[(mid, t)].priced
                            for t in self.typologies] for mid in self.severity.ids])
        return float(np.sum(self.p_h * self.exposures * priced))

    @property
    def flagged(self) -> int:
        return sum(1 for q in self.quotes.values() if not q.priced)

    def municipal_premium(self) -> np.ndarray:
        """Exposure-weighted WTP per square metre for each municipality."""
        tot = self.exposures.sum(axis=1)
        val = (self.p_h * self.exposures).sum(axis=1)
        return np.divide(val, tot, out=np.zeros_like(val), where=tot > 0)


def price_policy(fitted: FittedInputs, peril: str, policy: Policy) -> PolicyPricing:
    if peril not in ("seismic", "flood"):
        raise InputError("single-peril pricing expects seismic or flood")
    _require(fitted, peril)
    typs = _typologies(peril)
    n = len(fitted.municipalities)
    shape = (n, len(typs))
    p_h, er, expo, el = np.zeros(shape), np.zeros(shape), np.zeros(shape), np.zeros(shape)
    q = np.zeros(n)
    quotes = {}
    for i, m in enumerate(fitted.municipalities):
        for j, t in enumerate(typs):
            expo[i, j] = m.exposure(t)
            if expo[i, j] <= 0:
                continue
            model = loss_model(fitted, m, t, peril)
            cell = PricingCell(model, policy, m.id, t)
            quote = solve_wtp(cell)
            quotes[(m.id, t)] = quote
            p_h[i, j] = quote.p_h
            er[i, j] = cell.expected_reimbursement
            el[i, j] = cell.expected_loss
            q[i] = max(q[i], model.prob_loss_exceeds(policy.deductible))
    sev = claim_severities(fitted.ids, er, expo, q)
    return PolicyPricing(policy, peril, typs, quotes, p_h, er, expo, sev, el)


@dataclass
class SchemeRun:
    policy: Policy
    peril: str
    solutions: list
    aggregate: object
    severity: object
    pricings: tuple
    inputs: list  # BoundInputs per sampling

    @property
    def sum_p_h(self) -> float:
        return sum(p.sum_p_h for p in self.pricings)


def run_scheme(fitted: FittedInputs, peril: str, policy: Policy, groupings, epsilon1=0.01,
               epsilon2=0.02, mode=SIMPLIFIED, h=None, pricings=None) -> SchemeRun:
    """Price, build severities and solve the scheme for every grouping sample."""
    if peril not in PERILS:
        raise InputError(f"unknown peril {peril!r}")
    _require(fitted, peril)
    if pricings is None:
        if peril == "multi":
            pricings = (price_policy(fitted, "seismic", policy), price_policy(fitted, "flood", policy))
        else:
            pricings = (price_policy(fitted, peril, policy),)
    if peril == "multi":
        sev = MultiSeverity(pricings[0].severity, pricings[1].severity)
    else:
        sev = pricings[0].severity
    sum_p_h = sum(p.sum_p_h for p in pricings)
    sols, inputs = [], []
    for g in groupings:
        bi = BoundInputs(sev, g, epsilon1, epsilon2, mode, h)
        inputs.append(bi)
        sols.append(solve_scheme(bi, sum_p_h))
    return SchemeRun(policy, peril, sols, aggregate_over_samplings(sols), sev, tuple(pricings), inputs)


def multi_hazard_quotes(seismic: PolicyPricing, flood: PolicyPricing) -> list:
    """Per-municipality multi-hazard WTP from exposure-weighted single-peril quotes."""
    ps, pf = seismic.municipal_premium(), flood.municipal_premium()
    out = []
    for i, mid in enumerate(seismic.severity.ids):
        qs = DemandQuote(mid, "all", seismic.policy, float(ps[i]), 0.0)
        qf = DemandQuote(mid, "all", flood.policy, float(pf[i]), 0.0)
        out.append(multi_hazard_wtp(qs, qf))
    return out


def groupings_for(fitted: FittedInputs, r_km=DEFAULT_R_KM, samplings=100, seed=0):
    return sample_groupings(fitted.municipalities, r_km, samplings, seed)
