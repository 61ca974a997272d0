"""Expected losses, policy reimbursements and per-municipality claim severities."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, InputError
from .hazard import DepthDistribution, PowerLawHazard
from .quadrature import integrate
from .vulnerability import DepthDamageCurve, FragilityCatalogue, invert_depth

DEFAULT_RC = 1500.0
RTOL = 1e-10

CAP_CONVENTIONS = ("full", "net")


@dataclass(frozen=True)
class Policy:
    """Deductible and maximum coverage in euro per square metre.

    ``cap_convention="full"`` pays E once the loss reaches E + D; ``"net"``
    pays E - D once the loss reaches E (the alternative reading).
    """

    deductible: float
    max_coverage: float
    peril: str = "seismic"
    cap_convention: str = "full"

    def __post_init__(self):
        if not self.deductible >= 0:
            raise InputError("deductible must be non-negative")
        if not self.max_coverage > 0:
            raise InputError("max coverage must be positive")
        if self.peril not in ("seismic", "flood", "multi"):
            raise InputError(f"unknown peril {self.peril!r}")
        if self.cap_convention not in CAP_CONVENTIONS:
            raise InputError(f"unknown cap convention {self.cap_convention!r}")

    @property
    def terms(self) -> tuple:
        return (self.deductible, self.max_coverage, self.cap_convention)

    def check_rc(self, rc: float):
        if not self.deductible < rc:
            raise InputError(f"deductible {self.deductible} must be below RC={rc}")

    @property
    def cap(self) -> float:
        if self.cap_convention == "full":
            return self.max_coverage
        return max(self.max_coverage - self.deductible, 0.0)

    @property
    def kinks(self) -> tuple:
        """Loss levels where x(l) changes branch."""
        return (self.deductible, self.deductible + self.cap)

    def label(self) -> str:
        return f"D={self.deductible:g},E={self.max_coverage:g}"


def reimbursement(loss, policy: Policy):
    loss = np.asarray(loss, dtype=float)
    if np.any(loss < 0):
        raise InputError("loss must be non-negative")
    return np.clip(loss - policy.deductible, 0.0, policy.cap)


@dataclass(frozen=True)
class LossDistribution:
    """Discrete representation of a per-m2 loss law: atoms and probabilities.

    The atoms are Gauss-Kronrod nodes of an adaptive rule (plus point masses),
    so expectations of functions that are smooth between ``kinks`` are exact
    to quadrature tolerance.
    """

    values: np.ndarray
    probs: np.ndarray
    rc: float
    kinks: tuple = ()
    claim_threshold_prob: dict | None = None

    def expect(self, fn) -> float:
        return float(np.dot(self.probs, fn(self.values)))

    @property
    def mean(self) -> float:
        return float(np.dot(self.probs, self.values))

    @property
    def max_loss(self) -> float:
        live = self.values[self.probs > 0]
        return float(live.max()) if live.size else 0.0

    @property
    def is_zero(self) -> bool:
        return self.mean == 0.0


def _zero_distribution(rc) -> LossDistribution:
    return LossDistribution(np.zeros(1), np.ones(1), rc, (), {})


class SeismicLossModel:
    """Loss as a function of log-PGA for one typology, plus the amplified hazard."""

    def __init__(self, hazard: PowerLawHazard, typology: str, catalogue: FragilityCatalogue,
                 rc: float = DEFAULT_RC, amplification: float = 1.0, alpha: float = 1.0):
        self.curve = catalogue.curve(typology, rc, alpha)
        self.hazard = hazard
        self.typology = typology
        self.catalogue = catalogue
        self.rc = float(rc)
        self.s = float(amplification)
        self.alpha = alpha
        self.t_hi = catalogue.log_pga_upper()
        if self.s > 0:
            self.t0 = float(np.log(self.s * hazard.pga_min))

    def loss(self, t):
        return self.curve(t)

    def weight(self, t):
        """Density of t = log(PGA) on [t0, inf)."""
        h = self.hazard
        b1 = h.beta - 1.0
        return h.alpha * self.s ** b1 * np.exp(-b1 * t)

    def tail_prob(self, t) -> float:
        return float(self.hazard.exceedance(np.exp(t), self.s))

    def log_pga_at_loss(self, level) -> float | None:
        """log-PGA where the loss first reaches ``level`` (None if never reached)."""
        t = self.curve.log_pga_at(float(level))
        if t is None:
            return None
        return max(t, self.t0)

    def distribution(self, kinks=(), rtol=RTOL) -> LossDistribution:
        if self.s == 0:
            return _zero_distribution(self.rc)
        t0 = self.t0
        t_hi = max(self.t_hi, t0 + 1.0)
        pts = []
        for level in kinks:
            if 0 < level < self.rc:
                tk = self.log_pga_at_loss(level)
                if tk is not None and t0 < tk < t_hi:
                    pts.append(tk)
        ref_kinks = tuple(kinks)

        def f(t):
            lv = self.loss(t)
            ref = lv + sum(np.clip(lv - k, 0.0, None) for k in ref_kinks)
            return ref * self.weight(t)

        q = integrate(f, t0, t_hi, points=pts, rtol=rtol, atol=1e-14 * self.rc)
        values = self.loss(q.nodes)
        probs = q.weights * self.weight(q.nodes)
        tail = self.tail_prob(t_hi)
        values = np.append(values, float(self.loss(t_hi)))
        probs = np.append(probs, tail)
        return LossDistribution(values, probs, self.rc, tuple(kinks))

    def prob_loss_exceeds(self, level) -> float:
        """P(l > level); loss is continuous and increasing in PGA."""
        if self.s == 0:
            return 0.0
        if level <= 0:
            return 1.0
        tk = self.log_pga_at_loss(level)
        if tk is None:
            return 0.0
        return self.tail_prob(tk)

    def sample(self, n, rng):
        """Monte-Carlo losses by inverse transform on the amplified power law."""
        u = rng.random(n)
        pga = self.s * self.hazard.pga_min * (1.0 - u) ** (-1.0 / (self.hazard.beta - 1.0))
        return self.loss(np.log(pga))


class FloodLossModel:
    """Loss law RC/100 * g(depth) given a flood, zero otherwise."""

    def __init__(self, freq_prob: float, depth: DepthDistribution, curve: DepthDamageCurve,
                 rc: float = DEFAULT_RC):
        if not 0.0 <= freq_prob <= 1.0:
            raise InputError(f"flood probability must lie in [0, 1], got {freq_prob}")
        self.p = float(freq_prob)
        self.depth = depth
        self.curve = curve
        self.rc = float(rc)

    def loss_at_depth(self, d):
        return self.rc / 100.0 * self.curve(d)

    def depth_at_loss(self, level) -> float:
        pct = min(max(100.0 * level / self.rc, 0.0), 100.0)
        return invert_depth(self.curve, pct)

    def distribution(self, kinks=(), rtol=RTOL) -> LossDistribution:
        if self.p == 0:
            return _zero_distribution(self.rc)
        dmax = self.curve.delta_max
        u_max = float(self.depth.cdf(dmax))
        pts = []
        for level in kinks:
            if self.loss_at_depth(0.0) < level < self.rc:
                pts.append(float(self.depth.cdf(self.depth_at_loss(level))))
        values = [np.zeros(1)]
        probs = [np.array([1.0 - self.p])]
        if u_max > 0:
            ref_kinks = tuple(kinks)

            def f(u):
                lv = self.loss_at_depth(self.depth.ppf(u))
                return lv + sum(np.clip(lv - k, 0.0, None) for k in ref_kinks)

            q = integrate(f, 0.0, u_max, points=pts, rtol=rtol, atol=1e-14 * self.rc)
            values.append(self.loss_at_depth(self.depth.ppf(q.nodes)))
            probs.append(self.p * q.weights)
        values.append(np.array([self.rc]))
        probs.append(np.array([self.p * float(self.depth.sf(dmax))]))
        return LossDistribution(np.concatenate(values), np.concatenate(probs), self.rc, tuple(kinks))

    def prob_loss_exceeds(self, level) -> float:
        if self.p == 0:
            return 0.0
        if level < self.loss_at_depth(0.0):
            return self.p
        if level >= self.rc:
            return 0.0
        return self.p * float(self.depth.sf(self.depth_at_loss(level)))

    def sample(self, n, rng):
        flooded = rng.random(n) < self.p
        d = rng.gamma(self.depth.shape, 1.0 / self.depth.rate, size=n)
        return np.where(flooded, self.loss_at_depth(d), 0.0)


def seismic_loss_per_sqm(hazard, typology, catalogue, rc=DEFAULT_RC, amplification=1.0) -> float:
    model = SeismicLossModel(hazard, typology, catalogue, rc, amplification)
    return model.distribution().mean


def flood_loss_per_sqm(freq_prob, depth, curve, rc=DEFAULT_RC) -> float:
    return FloodLossModel(freq_prob, depth, curve, rc).distribution().mean


def expected_reimbursement(model, policy: Policy) -> float:
    policy.check_rc(model.rc)
    dist = model.distribution(kinks=policy.kinks)
    return dist.expect(lambda v: reimbursement(v, policy))


def expected_reimbursement_seismic(hazard, typology, catalogue, policy, rc=DEFAULT_RC,
                                   amplification=1.0) -> float:
    return expected_reimbursement(SeismicLossModel(hazard, typology, catalogue, rc, amplification), policy)


def expected_reimbursement_flood(freq_prob, depth, curve, policy, rc=DEFAULT_RC) -> float:
    return expected_reimbursement(FloodLossModel(freq_prob, depth, curve, rc), policy)


@dataclass(frozen=True)
class LossSurface:
    ids: tuple
    typologies: tuple
    per_sqm: np.ndarray  # (n_munis, n_typologies)
    exposures: np.ndarray

    def __post_init__(self):
        if np.any(self.per_sqm < 0) or np.any(self.exposures < 0):
            raise ConsistencyError("loss surface contains negative values")

    @property
    def municipal_totals(self) -> np.ndarray:
        return np.sum(self.per_sqm * self.exposures, axis=1)

    @property
    def national_total(self) -> float:
        return float(np.sum(self.municipal_totals))

    def summary(self) -> dict:
        exposed = np.where(self.exposures > 0, self.per_sqm, -np.inf)
        i, j = np.unravel_index(int(np.argmax(exposed)), exposed.shape)
        tot = self.municipal_totals
        k = int(np.argmax(tot))
        return {
            "max_loss_per_sqm": float(self.per_sqm[i, j]),
            "max_loss_per_sqm_municipality": self.ids[i],
            "max_loss_per_sqm_typology": self.typologies[j],
            "max_municipal_loss": float(tot[k]),
            "max_municipal_loss_municipality": self.ids[k],
            "national_total": self.national_total,
        }

    def write_csv(self, fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["municipality_id"] + [f"l_{t}" for t in self.typologies] + ["municipal_total"])
        for i, mid in enumerate(self.ids):
            w.writerow([mid] + [repr(float(v)) for v in self.per_sqm[i]]
                       + [repr(float(self.municipal_totals[i]))])


@dataclass(frozen=True)
class ClaimSeverity:
    """Per-municipality Bernoulli claim model: pays a_c with probability q_c."""

    ids: tuple
    a: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        if len(self.ids) != self.a.size or self.a.size != self.q.size:
            raise InputError("severity arrays must match the id list")
        if np.any(self.a < 0) or np.any((self.q < 0) | (self.q > 1)):
            raise ConsistencyError("severity out of range")

    @property
    def expected(self) -> np.ndarray:
        return self.q * self.a

    @property
    def e_y(self) -> float:
        return float(np.sum(self.expected))

    def index(self) -> dict:
        return {m: i for i, m in enumerate(self.ids)}

    def group_stats(self, grouping) -> "GroupStats":
        idx = self.index()
        if set(idx) != {m for g in grouping.groups for m in g} or grouping.n_total != len(self.ids):
            raise InputError("grouping does not cover the severity municipalities")
        rows = [np.fromiter((idx[m] for m in g), dtype=int) for g in grouping.groups]
        b = np.array([self.a[r].sum() for r in rows])
        e = np.array([self.expected[r].sum() for r in rows])
        n = np.array([r.size for r in rows], dtype=float)
        return GroupStats(n=n, b=b, e=e, n_c=len(self.ids), members=tuple(rows))


@dataclass(frozen=True)
class GroupStats:
    n: np.ndarray  # group sizes n_g
    b: np.ndarray  # b_g = sum of a_c
    e: np.ndarray  # E[Y^g]
    n_c: int
    members: tuple

    @property
    def w(self) -> np.ndarray:
        return self.n / self.n_c

    @property
    def e_y(self) -> float:
        return float(self.e.sum())


def claim_severities(ids, expected_reimb, exposures, claim_prob) -> ClaimSeverity:
    """a_c = sum_j M_jc E[x_jc] / q_c.

    ``expected_reimb`` and ``exposures`` are (n_munis, n_typologies) arrays;
    ``claim_prob`` is the per-municipality probability that any cell claims.
    """
    er = np.asarray(expected_reimb, dtype=float)
    m = np.asarray(exposures, dtype=float)
    q = np.asarray(claim_prob, dtype=float)
    total = np.sum(er * m, axis=1)
    bad = (q <= 0) & (total > 0)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise ConsistencyError(f"municipality {ids[i]}: zero claim probability with positive expected claims")
    a = np.where(q > 0, total / np.where(q > 0, q, 1.0), 0.0)
    return ClaimSeverity(ids=tuple(ids), a=a, q=np.where(total > 0, q, 0.0))


def combine_severities(first: ClaimSeverity, second: ClaimSeverity) -> "MultiSeverity":
    if first.ids != second.ids:
        raise InputError("severities must cover the same municipalities in the same order")
    return MultiSeverity(first, second)


@dataclass(frozen=True)
class MultiSeverity:
    """Two independent Bernoulli claim components per municipality."""

    seismic: ClaimSeverity
    flood: ClaimSeverity

    @property
    def ids(self):
        return self.seismic.ids

    @property
    def e_y(self) -> float:
        return self.seismic.e_y + self.flood.e_y

    def group_stats(self, grouping) -> GroupStats:
        s = self.seismic.group_stats(grouping)
        f = self.flood.group_stats(grouping)
        return GroupStats(n=s.n, b=s.b + f.b, e=s.e + f.e, n_c=s.n_c, members=s.members)

    def components(self) -> tuple:
        return (self.seismic, self.flood)
