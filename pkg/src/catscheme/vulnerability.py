"""Fragility curves, depth-damage curves and the seismic loss function."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy import optimize
from scipy.special import ndtr

from .errors import InputError

# Crossings smaller than this are treated as rounding noise in the catalogue.
ORDER_TOL = 1e-12


@dataclass(frozen=True)
class FragilityModel:
    id: str
    structure: str
    load: str
    params: tuple  # ((mu, sigma), ...) per limit state, log-g units
    stated_n_ls: int | None = None

    def __post_init__(self):
        if not self.params:
            raise InputError(f"fragility model {self.id} has no limit states")
        if any(not s > 0 for _, s in self.params):
            raise InputError(f"fragility model {self.id} has a non-positive sigma")

    @property
    def n_limit_states(self) -> int:
        return len(self.params)

    @property
    def mu(self) -> np.ndarray:
        return np.array([p[0] for p in self.params])

    @property
    def sigma(self) -> np.ndarray:
        return np.array([p[1] for p in self.params])


def fragility_prob(model: FragilityModel, ls: int, pga):
    """P(reaching limit state ``ls`` | pga); zero for ls = N+1."""
    n = model.n_limit_states
    if not 1 <= ls <= n + 1:
        raise InputError(f"limit state {ls} outside 1..{n + 1} for {model.id}")
    pga = np.asarray(pga, dtype=float)
    if np.any(pga <= 0):
        raise InputError("pga must be positive")
    if ls == n + 1:
        return np.zeros_like(pga)
    mu, sigma = model.params[ls - 1]
    return ndtr((np.log(pga) - mu) / sigma)


def damage_fraction(model: FragilityModel, ls: int, alpha: float = 1.0) -> float:
    n = model.n_limit_states
    if not 1 <= ls <= n:
        raise InputError(f"limit state {ls} outside 1..{n} for {model.id}")
    return (ls / n) ** alpha


def exceedance_matrix(model: FragilityModel, log_pga):
    """Ordered limit-state probabilities, shape (N, ...) for log-PGA input.

    Crossing curves are replaced by their upper envelope over higher limit
    states so that every band probability is non-negative.
    """
    t = np.asarray(log_pga, dtype=float)
    mu = model.mu.reshape((-1,) + (1,) * t.ndim)
    sg = model.sigma.reshape((-1,) + (1,) * t.ndim)
    p = ndtr((t[None] - mu) / sg)
    return np.maximum.accumulate(p[::-1], axis=0)[::-1]


def model_loss_fraction(model: FragilityModel, log_pga, alpha: float = 1.0):
    """Expected damage fraction of RC for one model: sum_LS (LS/N)^a [P(LS) - P(LS+1)]."""
    p = exceedance_matrix(model, log_pga)
    n = model.n_limit_states
    frac = (np.arange(1, n + 1) / n) ** alpha
    # Abel summation: sum_LS frac_LS (P_LS - P_LS+1) = sum_LS (frac_LS - frac_LS-1) P_LS
    inc = np.diff(np.concatenate([[0.0], frac]))
    return np.tensordot(inc, p, axes=(0, 0))


@dataclass(frozen=True)
class OrderingViolation:
    model_id: str
    limit_state: int
    max_excess: float
    at_pga: float


@dataclass
class LoadReport:
    n_models: int = 0
    stated_mismatches: list = field(default_factory=list)
    ordering_violations: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def lines(self) -> list:
        out = [f"models loaded: {self.n_models}"]
        for mid, stated, printed in self.stated_mismatches:
            out.append(f"{mid}: stated {stated} limit states, {printed} parameter rows used")
        for v in self.ordering_violations:
            out.append(
                f"{v.model_id}: LS{v.limit_state + 1} exceeds LS{v.limit_state} by "
                f"{v.max_excess:.3g} near pga={v.at_pga:.3g} g (envelope applied)"
            )
        out.extend(self.notes)
        return out


@dataclass(frozen=True, eq=False)
class FragilityCatalogue:
    models: dict
    typologies: dict  # typology -> tuple of model ids

    def models_for(self, typology: str) -> list:
        try:
            return [self.models[i] for i in self.typologies[typology]]
        except KeyError:
            raise InputError(f"typology {typology!r} not in catalogue") from None

    def loss_fraction(self, typology: str, log_pga, alpha: float = 1.0):
        """Average over the typology's models of the expected damage fraction."""
        ms = self.models_for(typology)
        return sum(model_loss_fraction(m, log_pga, alpha) for m in ms) / len(ms)

    def curve(self, typology: str, rc: float, alpha: float = 1.0) -> "TypologyLossCurve":
        return _typology_curve(self, typology, float(rc), float(alpha))

    def log_pga_upper(self, z: float = 7.1) -> float:
        """A log-PGA beyond which every fragility curve is within ~1e-12 of one."""
        return max(float(np.max(m.mu + z * m.sigma)) for m in self.models.values())


class TypologyLossCurve:
    """Mean monetary loss per m2 of a typology as a function of log-PGA."""

    def __init__(self, catalogue: FragilityCatalogue, typology: str, rc: float, alpha: float = 1.0):
        self.models = catalogue.models_for(typology)
        self.typology = typology
        self.rc = rc
        self.alpha = alpha
        self.t_hi = catalogue.log_pga_upper()
        self._levels = {}

    def __call__(self, t):
        ms = self.models
        return self.rc * sum(model_loss_fraction(m, t, self.alpha) for m in ms) / len(ms)

    def log_pga_at(self, level: float):
        """Smallest t with loss(t) >= level on [-50, t_hi]; None when never reached."""
        if level not in self._levels:
            self._levels[level] = self._solve(level)
        return self._levels[level]

    def _solve(self, level):
        lo, hi = -50.0, self.t_hi
        if float(self(hi)) < level:
            return None
        if float(self(lo)) >= level:
            return lo
        return optimize.brentq(lambda t: float(self(t)) - level, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps)


@lru_cache(maxsize=None)
def _typology_curve(catalogue, typology, rc, alpha):
    return TypologyLossCurve(catalogue, typology, rc, alpha)


def _ordering_scan(model: FragilityModel, grid: np.ndarray) -> list:
    mu, sg = model.mu[:, None], model.sigma[:, None]
    p = ndtr((grid[None] - mu) / sg)
    out = []
    for ls in range(model.n_limit_states - 1):
        excess = p[ls + 1] - p[ls]
        i = int(np.argmax(excess))
        if excess[i] > ORDER_TOL:
            out.append(OrderingViolation(model.id, ls + 1, float(excess[i]), float(np.exp(grid[i]))))
    return out


def load_catalogue(path=None, strict: bool = False):
    """Load the fragility catalogue; returns (catalogue, LoadReport).

    With ``strict`` any crossing of limit-state curves raises InputError.
    """
    if path is None:
        text = resources.files("catscheme").joinpath("data/fragility_catalogue.json").read_text()
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    raw = json.loads(text)
    report = LoadReport()
    models = {}
    grid = np.linspace(np.log(1e-4), np.log(20.0), 4001)
    for rec in raw["models"]:
        m = FragilityModel(
            id=rec["id"], structure=rec["structure"], load=rec["load"],
            params=tuple((float(a), float(b)) for a, b in rec["params"]),
            stated_n_ls=rec.get("stated_n_ls"),
        )
        if m.id in models:
            raise InputError(f"duplicate fragility model id {m.id}")
        models[m.id] = m
        if m.stated_n_ls is not None and m.stated_n_ls != m.n_limit_states:
            report.stated_mismatches.append((m.id, m.stated_n_ls, m.n_limit_states))
        report.ordering_violations.extend(_ordering_scan(m, grid))
    report.n_models = len(models)
    if strict and report.ordering_violations:
        raise InputError("fragility curves cross: " + "; ".join(report.lines()[1:]))
    typ = {k: tuple(v) for k, v in raw["typologies"].items()}
    for k, ids in typ.items():
        missing = [i for i in ids if i not in models]
        if missing or not ids:
            raise InputError(f"typology {k} references unknown models {missing}")
    return FragilityCatalogue(models=models, typologies=typ), report


@dataclass(frozen=True)
class DepthDamageCurve:
    """Percent damage as a polynomial in depth, clamped to [0, 100] and made monotone."""

    storeys: str
    coefficients: tuple  # ascending powers of depth in metres
    delta_max: float

    def __post_init__(self):
        if not self.delta_max >= 0:
            raise InputError("delta_max must be non-negative")

    def _raw(self, d):
        return np.polynomial.polynomial.polyval(d, self.coefficients)

    def __call__(self, depth):
        d = np.asarray(depth, dtype=float)
        if np.any(d < 0):
            raise InputError("depth must be non-negative")
        if self.delta_max == 0:
            return np.full_like(d, 100.0)
        inside = np.clip(self._raw(np.minimum(d, self.delta_max)), 0.0, 100.0)
        if not self._monotone:
            inside = np.interp(np.minimum(d, self.delta_max), self._grid, self._envelope)
        return np.where(d >= self.delta_max, 100.0, inside)

    @property
    def _grid(self):
        return np.linspace(0.0, self.delta_max, 2001)

    @property
    def _envelope(self):
        return np.maximum.accumulate(np.clip(self._raw(self._grid), 0.0, 100.0))

    @property
    def _monotone(self) -> bool:
        v = np.clip(self._raw(self._grid), 0.0, 100.0)
        return bool(np.all(np.diff(v) >= 0))


def depth_damage(curve: DepthDamageCurve, depth):
    return curve(depth)


def invert_depth(curve: DepthDamageCurve, percent_target: float, tol: float = 1e-9) -> float:
    """Smallest depth with curve(depth) >= target, by bisection."""
    if not 0.0 <= percent_target <= 100.0:
        raise InputError("percent target must lie in [0, 100]")
    if percent_target <= float(curve(0.0)):
        return 0.0
    if percent_target >= 100.0:
        return curve.delta_max
    lo, hi = 0.0, curve.delta_max
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if float(curve(mid)) >= percent_target:
            hi = mid
        else:
            lo = mid
    return hi


def load_depth_damage(path=None) -> dict:
    if path is None:
        text = resources.files("catscheme").joinpath("data/depth_damage.json").read_text()
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    out = {}
    for rec in json.loads(text)["curves"]:
        c = DepthDamageCurve(str(rec["storeys"]), tuple(rec["coefficients"]), float(rec["delta_max"]))
        out["S" + c.storeys] = c
    return out
