"""Monte-Carlo and exact-enumeration checks of the aggregate-claims bounds."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .losses import MultiSeverity
from .scheme import simplified_bound

CHUNK = 8192
MIN_DRAWS = 10_000
MAX_ENUMERATION = 20
Z95 = 1.959963984540054

RESPECTED = "bound-respected"
VIOLATED = "bound-violated"


def _bernoulli_parts(severity):
    comps = severity.components() if isinstance(severity, MultiSeverity) else (severity,)
    a = np.concatenate([c.a for c in comps])
    q = np.concatenate([c.q for c in comps])
    return a, q


def _chunk_rng(seed: int, index: int) -> np.random.Generator:
    # One Philox stream per chunk: reproducible for any split of chunks across workers.
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))


def simulate_chunk(a, q, seed: int, index: int, size: int) -> np.ndarray:
    u = _chunk_rng(seed, index).random((size, a.size))
    return (u < q).astype(float) @ a


def simulate_aggregate_claims(severity, n_draws: int, seed: int) -> np.ndarray:
    """Independent Bernoulli draws of Y = sum_c X_c a_c."""
    if n_draws < MIN_DRAWS:
        raise InputError(f"n_draws must be at least {MIN_DRAWS}")
    a, q = _bernoulli_parts(severity)
    out = np.empty(n_draws)
    for k, start in enumerate(range(0, n_draws, CHUNK)):
        size = min(CHUNK, n_draws - start)
        out[start:start + size] = simulate_chunk(a, q, seed, k, size)
    return out


def wilson_interval(k: int, n: int, z: float = Z95) -> tuple:
    if n <= 0:
        raise InputError("need at least one trial")
    p = k / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if k == 0 else max(0.0, centre - half)
    hi = 1.0 if k == n else min(1.0, centre + half)
    return lo, hi


@dataclass(frozen=True)
class SimulationReport:
    n_draws: int
    seed: int
    threshold: float
    exceedances: int
    empirical_exceedance: float
    wilson_low: float
    wilson_high: float
    analytic_bound: float
    verdict: str
    label: str = ""

    CSV_FIELDS = ("label", "seed", "n_draws", "threshold", "exceedances", "empirical",
                  "wilson_low", "wilson_high", "bound", "verdict")

    def row(self) -> list:
        return [self.label, self.seed, self.n_draws, repr(self.threshold), self.exceedances,
                repr(self.empirical_exceedance), repr(self.wilson_low), repr(self.wilson_high),
                repr(self.analytic_bound), self.verdict]


def report_from_sample(sample, threshold, bound, seed, label="") -> SimulationReport:
    sample = np.asarray(sample)
    k = int(np.count_nonzero(sample > threshold))
    n = sample.size
    lo, hi = wilson_interval(k, n)
    verdict = VIOLATED if lo > bound else RESPECTED
    return SimulationReport(n, seed, float(threshold), k, k / n, lo, hi, float(bound), verdict, label)


def check_bound(severity, grouping, phi: float, n_draws: int = 100_000, seed: int = 0,
                claimed_bound: float | None = None, sample=None, label: str = "") -> SimulationReport:
    """Compare empirical P(Y > N_c phi + E[Y]) with the simplified bound.

    ``claimed_bound`` overrides the recomputed bound (used when auditing a
    stored report); ``sample`` reuses previously simulated draws.
    """
    if not phi > 0:
        raise InputError("phi must be positive")
    stats = severity.group_stats(grouping)
    threshold = stats.n_c * phi + stats.e_y
    bound = simplified_bound(phi, stats) if claimed_bound is None else claimed_bound
    if sample is None:
        sample = simulate_aggregate_claims(severity, n_draws, seed)
    return report_from_sample(sample, threshold, bound, seed, label)


@dataclass(frozen=True)
class ExactDistribution:
    values: np.ndarray
    probs: np.ndarray

    @property
    def mean(self) -> float:
        return float(np.dot(self.values, self.probs))

    def sf(self, t) -> np.ndarray:
        """P(Y > t) for each t."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        tail = np.concatenate([np.cumsum(self.probs[::-1])[::-1], [0.0]])
        idx = np.searchsorted(self.values, t, side="right")
        return tail[idx]


def enumerate_small(severity) -> ExactDistribution:
    """Exact law of Y by expanding all 2^n Bernoulli outcomes."""
    a, q = _bernoulli_parts(severity)
    if a.size > MAX_ENUMERATION:
        raise InputError(f"exact enumeration supports at most {MAX_ENUMERATION} Bernoulli terms")
    values = np.zeros(1)
    probs = np.ones(1)
    for ai, qi in zip(a, q):
        values = np.concatenate([values, values + ai])
        probs = np.concatenate([probs * (1.0 - qi), probs * qi])
    order = np.argsort(values, kind="stable")
    values, probs = values[order], probs[order]
    uniq, start = np.unique(values, return_index=True)
    return ExactDistribution(uniq, np.add.reduceat(probs, start))


def write_reports(fh, reports):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(SimulationReport.CSV_FIELDS)
    for r in reports:
        w.writerow(r.row())
