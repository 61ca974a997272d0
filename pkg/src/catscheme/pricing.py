"""Maximum willingness-to-pay premiums under log(x + 1) utility."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InputError
from .losses import LossDistribution, Policy, reimbursement

BISECTION_ITERS = 60
NO_POSITIVE_WTP = "no-positive-WTP"


class PricingCell:
    """A (municipality, typology, policy) cell: loss law plus policy terms.

    ``model`` is a SeismicLossModel or FloodLossModel; its distribution is
    built once with the policy kinks resolved and reused for every premium.
    """

    def __init__(self, model, policy: Policy, municipality: str = "", typology: str = ""):
        policy.check_rc(model.rc)
        self.model = model
        self.policy = policy
        self.municipality = municipality
        self.typology = typology
        self.rc = model.rc
        self.dist: LossDistribution = model.distribution(kinks=policy.kinks)
        live = self.dist.probs > 0
        self._w = self.dist.probs[live]
        self._l = self.dist.values[live]
        self._x = reimbursement(self._l, policy)
        # Wealth plus one in each state when uninsured.
        self._a = self.rc - self._l + 1.0

    @classmethod
    def from_distribution(cls, dist: LossDistribution, policy: Policy, municipality="", typology=""):
        class _Fixed:
            rc = dist.rc

            @staticmethod
            def distribution(kinks=()):
                return dist

        return cls(_Fixed(), policy, municipality, typology)

    @property
    def zero_hazard(self) -> bool:
        return bool(np.all(self._l == 0))

    @property
    def expected_reimbursement(self) -> float:
        return float(np.dot(self._w, self._x))

    @property
    def expected_loss(self) -> float:
        return float(np.dot(self._w, self._l))

    @property
    def log_bound(self) -> float:
        """Premium at which some insured log argument reaches zero."""
        return float(np.min(self._a + self._x))

    @property
    def upper(self) -> float:
        p = self.policy
        return min(self.rc, p.deductible + p.max_coverage, self.log_bound)

    def residual(self, p: float) -> float:
        """Expected utility uninsured minus insured at premium ``p``."""
        arg = self._a + self._x - p
        if np.any(arg <= 0):
            raise DomainError(f"premium {p} makes insured wealth non-positive")
        return float(-np.dot(self._w, np.log1p((self._x - p) / self._a)))

    def utility(self, p: float | None) -> float:
        """Expected log(wealth + 1); ``p=None`` means uninsured."""
        if p is None:
            return float(np.dot(self._w, np.log(self._a)))
        return float(np.dot(self._w, np.log(self._a + self._x - p)))


def indifference_residual(p: float, cell: PricingCell) -> float:
    if not 0 <= p < cell.rc:
        raise DomainError(f"premium {p} outside [0, RC)")
    return cell.residual(p)


@dataclass(frozen=True)
class DemandQuote:
    municipality: str
    typology: str
    policy: Policy
    p_h: float
    residual: float
    expected_reimbursement: float = 0.0
    flags: tuple = field(default=())

    @property
    def priced(self) -> bool:
        return NO_POSITIVE_WTP not in self.flags


def solve_wtp(cell: PricingCell) -> DemandQuote:
    """Bisection on the increasing indifference residual."""
    er = cell.expected_reimbursement

    def quote(p, res, flags=()):
        return DemandQuote(cell.municipality, cell.typology, cell.policy, p, res, er, tuple(flags))

    if cell.zero_hazard:
        return quote(0.0, 0.0)
    r0 = cell.residual(0.0)
    if r0 >= 0:
        return quote(0.0, r0, [NO_POSITIVE_WTP] if r0 > 0 or er > 0 else [])
    hi = cell.upper
    if hi < cell.log_bound and cell.residual(hi) <= 0:
        return quote(0.0, r0, [NO_POSITIVE_WTP])
    lo = 0.0
    for _ in range(BISECTION_ITERS):
        mid = 0.5 * (lo + hi)
        if cell.residual(mid) > 0:
            hi = mid
        else:
            lo = mid
    p = 0.5 * (lo + hi)
    return quote(p, cell.residual(p))


def multi_hazard_wtp(seismic: DemandQuote, flood: DemandQuote) -> DemandQuote:
    if seismic.policy.terms != flood.policy.terms:
        raise InputError("multi-hazard quotes must share deductible, coverage and cap convention")
    if seismic.municipality != flood.municipality:
        raise InputError("multi-hazard quotes must refer to the same municipality")
    pol = Policy(seismic.policy.deductible, seismic.policy.max_coverage, "multi",
                 seismic.policy.cap_convention)
    flags = tuple(sorted(set(seismic.flags) | set(flood.flags)))
    return DemandQuote(
        seismic.municipality, f"{seismic.typology}+{flood.typology}", pol,
        seismic.p_h + flood.p_h, max(abs(seismic.residual), abs(flood.residual)),
        seismic.expected_reimbursement + flood.expected_reimbursement, flags,
    )
