"""Hazard distributions: power-law PGA, negative-binomial flood counts, gamma depths."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize, special, stats

from .errors import FitError, InputError


@dataclass(frozen=True)
class PowerLawHazard:
    """Annual PGA density alpha * pga**(-beta) on [pga_min, inf)."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise InputError(f"alpha must be positive, got {self.alpha}")
        if not self.beta > 1:
            raise InputError(f"beta must exceed 1, got {self.beta}")

    @property
    def pga_min(self) -> float:
        b1 = self.beta - 1.0
        return float(np.exp(np.log(self.alpha / b1) / b1))

    def exceedance(self, pga, amplification=1.0):
        """Probability that the (amplified) PGA exceeds ``pga``; 1 below the support."""
        pga = np.asarray(pga, dtype=float)
        b1 = self.beta - 1.0
        out = self.alpha / b1 * (pga / amplification) ** (-b1)
        return np.minimum(out, 1.0)

    def quantile_of_exceedance(self, prob, amplification=1.0):
        """PGA level whose exceedance probability equals ``prob``."""
        b1 = self.beta - 1.0
        return amplification * (np.asarray(prob) * b1 / self.alpha) ** (-1.0 / b1)


def fit_power_law(points) -> PowerLawHazard:
    """Log-log least squares on exceedance points (pga, probability)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3 or pts.shape[1] != 2:
        raise FitError("power-law fit needs at least 3 (pga, exceedance) points")
    pga, lam = pts[:, 0], pts[:, 1]
    if np.any(pga <= 0) or np.any(lam <= 0) or np.any(lam >= 1):
        raise FitError("pga must be positive and exceedance in (0, 1)")
    slope, intercept = np.polyfit(np.log(pga), np.log(lam), 1)
    b1 = -slope
    if not b1 > 0:
        raise FitError(f"fitted beta={1 + b1:.6g} is not above 1; density not integrable")
    return PowerLawHazard(alpha=float(np.exp(intercept) * b1), beta=float(1.0 + b1))


def pga_density(h: PowerLawHazard, pga, amplification=1.0):
    """Density of amplification * bedrock PGA; zero below the amplified support."""
    if not amplification > 0:
        raise InputError(f"amplification must be positive, got {amplification}")
    pga = np.asarray(pga, dtype=float)
    if np.any(pga <= 0):
        raise InputError("pga must be positive")
    s = amplification
    dens = h.alpha * s ** (h.beta - 1.0) * pga ** (-h.beta)
    return np.where(pga >= s * h.pga_min, dens, 0.0)


@dataclass(frozen=True)
class FloodFrequency:
    nb_size: float
    nb_prob: float
    mean_flooded_munis: float
    cluster_size: int

    def __post_init__(self):
        if not 0 < self.nb_prob <= 1:
            raise InputError("nb_prob must lie in (0, 1]")
        if not self.nb_size > 0:
            raise InputError("nb_size must be positive")
        if not 0 < self.mean_flooded_munis <= self.cluster_size:
            raise InputError("mean_flooded_munis must lie in (0, cluster_size]")

    @property
    def p_zero(self) -> float:
        return float(self.nb_prob ** self.nb_size)

    @property
    def mean(self) -> float:
        return self.nb_size * (1 - self.nb_prob) / self.nb_prob


def prob_at_least_one_flood(ff: FloodFrequency, p3_extent: float) -> float:
    if not 0.0 <= p3_extent <= 1.0:
        raise InputError(f"p3_extent must be in [0, 1], got {p3_extent}")
    p = (1.0 - ff.p_zero) * p3_extent * ff.mean_flooded_munis / ff.cluster_size
    return float(min(max(p, 0.0), 1.0))


# Above this size the negative binomial is numerically Poisson.
NB_MAX_SIZE = 1e8


def fit_flood_frequency(counts) -> tuple:
    """Negative-binomial MLE (size, prob); the fitted mean equals the sample mean."""
    x = np.asarray(counts, dtype=float)
    if x.size < 10:
        raise FitError("need at least 10 yearly counts")
    if np.any(x < 0) or np.any(x != np.round(x)):
        raise FitError("counts must be non-negative integers")
    m = x.mean()
    if m == 0:
        raise FitError("all-zero sample: negative binomial is degenerate")
    n = x.size

    def score(r):
        return np.sum(special.digamma(x + r)) - n * special.digamma(r) + n * np.log(r / (r + m))

    # The profile score is positive for small sizes and changes sign once at the MLE
    # when the sample is overdispersed; otherwise the Poisson limit is the MLE.
    if x.var() <= m or score(NB_MAX_SIZE) >= 0:
        r = NB_MAX_SIZE
    else:
        lo = 1e-8
        hi = max(1.0, m * m / max(x.var() - m, 1e-12))
        while score(hi) > 0:
            lo, hi = hi, hi * 4.0
        r = optimize.brentq(score, lo, hi, xtol=1e-12, rtol=1e-12)
    return float(r), float(r / (r + m))


@dataclass(frozen=True)
class DepthDistribution:
    shape: float
    rate: float
    sse: float | None = None
    sae: float | None = None

    def __post_init__(self):
        if not (self.shape > 0 and self.rate > 0):
            raise InputError("gamma shape and rate must be positive")

    def pdf(self, d):
        return stats.gamma.pdf(d, self.shape, scale=1.0 / self.rate)

    def cdf(self, d):
        d = np.maximum(np.asarray(d, dtype=float), 0.0)
        return special.gammainc(self.shape, self.rate * d)

    def sf(self, d):
        d = np.maximum(np.asarray(d, dtype=float), 0.0)
        return special.gammaincc(self.shape, self.rate * d)

    def ppf(self, u):
        return special.gammaincinv(self.shape, np.asarray(u, dtype=float)) / self.rate


def fit_depth_gamma(depths, bins: int = 50) -> DepthDistribution:
    """Gamma MLE by Newton iteration on log(k) - digamma(k) = log(mean) - mean(log x)."""
    x = np.asarray(depths, dtype=float)
    if x.size < 10:
        raise FitError("need at least 10 depth observations")
    if np.any(~(x > 0)):
        raise InputError("depths must be strictly positive")
    s = np.log(x.mean()) - np.mean(np.log(x))
    if not s > 0:
        raise FitError("degenerate depth sample (all values equal)")
    k = (3.0 - s + np.sqrt((s - 3.0) ** 2 + 24.0 * s)) / (12.0 * s)
    for _ in range(100):
        step = (np.log(k) - special.digamma(k) - s) / (1.0 / k - special.polygamma(1, k))
        k_new = k - step
        if k_new <= 0:
            k_new = k / 2
        if abs(k_new - k) <= 1e-14 * k:
            k = k_new
            break
        k = k_new
    rate = k / x.mean()
    freq, edges = np.histogram(x, bins=bins)
    emp = freq / x.size
    fitted = np.diff(special.gammainc(k, rate * edges))
    diff = emp - fitted
    return DepthDistribution(
        shape=float(k), rate=float(rate),
        sse=float(np.sum(diff ** 2)), sae=float(np.sum(np.abs(diff))),
    )
