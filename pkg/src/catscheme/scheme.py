"""Solvency bounds, demand/supply reconciliation and the optimal scheme."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np
from scipy.special import logsumexp

from .errors import InputError
from .losses import ClaimSeverity, GroupStats, MultiSeverity

SIMPLIFIED = "simplified-bernoulli"
GENERIC = "generic-mgf"
MODES = (SIMPLIFIED, GENERIC)

VACUOUS_EPS2 = "vacuous-eps2"
MARKET_FAILURE = "total-market-failure"


@dataclass(frozen=True)
class BoundInputs:
    severity: ClaimSeverity | MultiSeverity
    grouping: object
    epsilon1: float = 0.01
    epsilon2: float = 0.02
    mode: str = SIMPLIFIED
    h: float | None = None  # fixed solver variable for generic mode; None = optimise

    def __post_init__(self):
        if not 0 < self.epsilon1 < 1 or not 0 < self.epsilon2 < 1:
            raise InputError("epsilon targets must lie in (0, 1)")
        if self.epsilon2 < self.epsilon1:
            raise InputError("epsilon2 < epsilon1: insolvency should never be preferred to refilling")
        if self.mode not in MODES:
            raise InputError(f"unknown bound mode {self.mode!r}")
        if self.h is not None and not self.h > 0:
            raise InputError("h must be positive")

    @property
    def stats(self) -> GroupStats:
        return self.severity.group_stats(self.grouping)


# ---- simplified (bounded Bernoulli) form --------------------------------

def simplified_bound(phi: float, stats: GroupStats) -> float:
    """sum_g w_g exp(-2 phi^2 n_g^2 / b_g^2); groups with b_g = 0 never exceed."""
    live = stats.b > 0
    if phi <= 0:
        return float(np.sum(stats.w[live]))
    with np.errstate(over="ignore", divide="ignore"):
        z = -2.0 * (phi * (stats.n[live] / stats.b[live])) ** 2
    return float(np.sum(stats.w[live] * np.exp(z)))


def _invert_simplified(eps: float, stats: GroupStats) -> float:
    live = stats.b > 0
    if np.sum(stats.w[live]) <= eps:
        return 0.0
    with np.errstate(over="ignore", divide="ignore"):
        hi = 2.0 * float(np.max(stats.b[live] / stats.n[live])) * np.sqrt(np.log(1.0 / eps) / 2.0)
    hi = min(hi, np.finfo(float).max)
    lo = 0.0
    # Returning the upper end keeps bound(phi) <= eps exactly. The iteration cap
    # covers the whole double range when the ratios are extreme.
    for _ in range(2200):
        if hi - lo <= 1e-13 * hi:
            break
        mid = 0.5 * (lo + hi)
        if simplified_bound(mid, stats) > eps:
            lo = mid
        else:
            hi = mid
    return hi


# ---- generic moment-generating-function form ---------------------------

def _components(severity):
    if isinstance(severity, MultiSeverity):
        return severity.components()
    return (severity,)


def _log_terms(h, severity, stats: GroupStats) -> np.ndarray:
    """log of w_g exp(-h E_g/n_g) prod_c E[exp(h X_c a_c / n_g)], shape (len(h), groups)."""
    h = np.atleast_1d(np.asarray(h, dtype=float))[:, None]
    out = np.log(stats.w)[None, :] - h * (stats.e / stats.n)[None, :]
    for comp in _components(severity):
        with np.errstate(divide="ignore"):
            log_p0, log_p1 = np.log1p(-comp.q), np.log(comp.q)
        for g, rows in enumerate(stats.members):
            z = h * (comp.a[rows] / stats.n[g])[None, :]
            out[:, g] += np.sum(np.logaddexp(log_p0[rows][None, :], log_p1[rows][None, :] + z), axis=1)
    return out


def generic_log_bound(phi: float, h: float, severity, stats: GroupStats) -> float:
    return float(logsumexp(_log_terms(h, severity, stats)[0]) - h * phi)


def _h_grid(stats: GroupStats, n: int = 600) -> np.ndarray:
    live = stats.b > 0
    scale = float(np.max(stats.b[live] / stats.n[live])) if np.any(live) else 1.0
    return np.geomspace(1e-4, 1e3, n) / scale


def generic_phi(eps: float, severity, stats: GroupStats, h: float | None = None) -> tuple:
    """(phi, h) from the mgf bound, minimising over a log grid when h is None."""
    if not np.any(stats.b > 0):
        return 0.0, h if h is not None else np.nan
    hs = np.array([h]) if h is not None else _h_grid(stats)
    phis = (logsumexp(_log_terms(hs, severity, stats), axis=1) - np.log(eps)) / hs
    k = int(np.argmin(phis))
    phi = float(phis[k])
    return (max(phi, 0.0) if h is None else phi), float(hs[k])


def generic_bound(phi: float, severity, stats: GroupStats, h: float | None = None) -> float:
    if not np.any(stats.b > 0):
        return 0.0
    hs = np.array([h]) if h is not None else _h_grid(stats)
    logs = logsumexp(_log_terms(hs, severity, stats), axis=1) - hs * phi
    return float(min(1.0, np.exp(np.min(logs))))


# ---- public operations -------------------------------------------------

def _solve(eps: float, inputs: BoundInputs) -> float:
    if not 0 < eps < 1:
        raise InputError("epsilon must lie in (0, 1)")
    stats = inputs.stats
    if inputs.mode == SIMPLIFIED:
        return _invert_simplified(eps, stats)
    return generic_phi(eps, inputs.severity, stats, inputs.h)[0]


def solve_phi(inputs: BoundInputs) -> float:
    return _solve(inputs.epsilon1, inputs)


def solve_gamma(inputs: BoundInputs) -> float:
    return _solve(inputs.epsilon2, inputs)


def bound_at(phi: float, inputs: BoundInputs) -> float:
    stats = inputs.stats
    if inputs.mode == SIMPLIFIED:
        return simplified_bound(phi, stats)
    return generic_bound(phi, inputs.severity, stats, inputs.h)


@dataclass(frozen=True)
class Reconciliation:
    c: float
    sum_p_star: float
    market_failure: bool = False


def reconcile(sum_p_h: float, gamma: float, e_y: float, n_c: int) -> Reconciliation:
    """c = (N_c gamma + E[Y]) / sum p^H and sum p* = min(c, 1) sum p^H."""
    if sum_p_h < 0:
        raise InputError("sum of willingness-to-pay premiums must be non-negative")
    required = n_c * gamma + e_y
    if sum_p_h == 0:
        if required > 0:
            return Reconciliation(np.inf, 0.0, True)
        return Reconciliation(1.0, 0.0)
    with np.errstate(over="ignore"):
        c = required / sum_p_h
    return Reconciliation(c, min(c, 1.0) * sum_p_h)


@dataclass(frozen=True)
class SchemeSolution:
    sum_p_h: float
    sum_p_star: float
    c: float
    w_d_star: float
    eps1_star: float
    eps2_star: float
    phi: float
    gamma: float
    phi_star: float
    gamma_star: float
    e_y: float
    n_c: int
    seed: int | None = None
    flags: tuple = field(default=())

    NUMERIC = ("sum_p_h", "sum_p_star", "c", "w_d_star", "eps1_star", "eps2_star",
               "phi", "gamma", "phi_star", "gamma_star", "e_y")


def finalize_scheme(inputs: BoundInputs, sum_p_star: float, sum_p_h: float | None = None,
                    c: float | None = None, phi: float | None = None,
                    gamma: float | None = None, flags=()) -> SchemeSolution:
    stats = inputs.stats
    n_c = stats.n_c
    e_y = stats.e_y
    if phi is None:
        phi = solve_phi(inputs)
    if gamma is None:
        gamma = solve_gamma(inputs)
    flags = list(flags)
    w_d = max(n_c * phi + e_y - sum_p_star, 0.0)
    phi_star = (w_d + sum_p_star - e_y) / n_c
    gamma_star = (sum_p_star - e_y) / n_c
    # With W_d* > 0, phi* equals the solved phi up to round-off.
    eps1 = bound_at(phi if w_d > 0 else phi_star, inputs)
    if gamma_star <= 0:
        eps2 = 1.0
        flags.append(VACUOUS_EPS2)
    else:
        eps2 = bound_at(gamma_star, inputs)
    eps2 = max(eps2, eps1)
    return SchemeSolution(
        sum_p_h=float(sum_p_h if sum_p_h is not None else np.nan),
        sum_p_star=float(sum_p_star), c=float(c if c is not None else np.nan),
        w_d_star=float(w_d), eps1_star=float(eps1), eps2_star=float(eps2),
        phi=float(phi), gamma=float(gamma), phi_star=float(phi_star), gamma_star=float(gamma_star),
        e_y=float(e_y), n_c=n_c, seed=getattr(inputs.grouping, "seed", None), flags=tuple(flags),
    )


def solve_scheme(inputs: BoundInputs, sum_p_h: float) -> SchemeSolution:
    phi = solve_phi(inputs)
    gamma = solve_gamma(inputs)
    stats = inputs.stats
    rec = reconcile(sum_p_h, gamma, stats.e_y, stats.n_c)
    flags = [MARKET_FAILURE] if rec.market_failure else []
    return finalize_scheme(inputs, rec.sum_p_star, sum_p_h, rec.c, phi, gamma, flags)


def multi_hazard_bounds(seismic: ClaimSeverity, flood: ClaimSeverity, grouping, epsilon1=0.01,
                        epsilon2=0.02, sum_p_h: float = 0.0, mode: str = SIMPLIFIED,
                        h: float | None = None) -> SchemeSolution:
    """Joint scheme for independent perils: b_g and E[Y^g] add across perils."""
    if seismic.ids != flood.ids:
        raise InputError("seismic and flood severities cover different municipalities")
    ids = set(seismic.ids)
    if {m for g in grouping.groups for m in g} != ids:
        raise InputError("grouping does not match the severity municipalities")
    sev = MultiSeverity(seismic, flood)
    return solve_scheme(BoundInputs(sev, grouping, epsilon1, epsilon2, mode, h), sum_p_h)


@dataclass(frozen=True)
class AggregateSolution:
    mean: dict
    cov: dict
    n_samplings: int
    flags: tuple = ()

    def fmt(self, name: str, digits: int = 3) -> str:
        return f"{self.mean[name]:.{digits}f} ({self.cov[name]:.3f})"


def aggregate_over_samplings(per_sampling) -> AggregateSolution:
    """Field-wise mean and coefficient of variation (population standard deviation)."""
    sols = list(per_sampling)
    if not sols:
        raise InputError("need at least one sampling")
    mean, cov = {}, {}
    for name in SchemeSolution.NUMERIC:
        v = np.array([getattr(s, name) for s in sols], dtype=float)
        m = float(np.mean(v))
        sd = float(np.std(v))
        # Identical values give exactly zero spread regardless of round-off.
        if np.all(v == v[0]):
            sd = 0.0
        mean[name] = m
        cov[name] = 0.0 if m == 0 else sd / abs(m)
    flags = tuple(sorted({f for s in sols for f in s.flags}))
    return AggregateSolution(mean, cov, len(sols), flags)
