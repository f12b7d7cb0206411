"""Core stability of the grand coalition and defection cascades.

A composition *blocks* when every type present in it would pay strictly less
there than in the grand coalition. Because schemes are anonymous, scanning the
``(N_low + 1) x (N_high + 1)`` composition lattice is equivalent to scanning
every subset of players.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np

from .errors import DomainError
from .model import CostParams, Population, PoolComposition, cost
from .pricing import PriceSchedule, PricingScheme, _grids, _mask_absent, get_scheme

DEFAULT_EPSILON = 1e-9
CascadePolicy = Literal["best_blocking", "low_risk_exodus"]


@dataclass(frozen=True)
class StabilityReport:
    stable: bool
    blocking_witness: Optional[PoolComposition]
    prices_at_witness: Optional[PriceSchedule]
    compositions_checked: int
    grand_prices: Optional[PriceSchedule] = None
    witness_saving: Optional[float] = None
    blocking_count: int = 0

    def __post_init__(self):
        assert self.stable == (self.blocking_witness is None)


@dataclass
class _Scan:
    blocks: np.ndarray
    saving: np.ndarray
    low: np.ndarray
    high: np.ndarray
    grand: PriceSchedule


def _to_schedule(n_low, n_high, low, high) -> PriceSchedule:
    return PriceSchedule(
        float(low) if n_low else None,
        float(high) if n_high else None,
    )


def _scan(scheme: PricingScheme, pop: Population, params: CostParams, epsilon: float) -> _Scan:
    if pop.size == 0:
        raise DomainError("the grand coalition is empty")
    if epsilon < 0:
        raise DomainError("epsilon must be non-negative")
    low, high = scheme.price_grid(pop, params)
    N_low, N_high = pop.grand
    g_low, g_high = low[N_low, N_high], high[N_low, N_high]
    a, b = _grids(pop)
    present_low, present_high = a > 0, b > 0
    with np.errstate(invalid="ignore"):
        gain_low = np.where(present_low, g_low - low, np.inf)
        gain_high = np.where(present_high, g_high - high, np.inf)
        saving = np.minimum(gain_low, gain_high)
        blocks = saving > epsilon
    blocks[0, 0] = False
    saving = np.where(blocks, saving, -np.inf)
    return _Scan(blocks, saving, low, high, _to_schedule(N_low, N_high, g_low, g_high))


def _best(scan: _Scan) -> PoolComposition:
    best = scan.saving.max()
    rows, cols = np.nonzero(scan.saving == best)
    i = int(np.lexsort((cols, rows))[-1])
    return PoolComposition(int(rows[i]), int(cols[i]))


def _report(scan: _Scan, witness: Optional[PoolComposition]) -> StabilityReport:
    checked = scan.blocks.size - 1
    if witness is None:
        return StabilityReport(True, None, None, checked, scan.grand)
    i, j = witness
    return StabilityReport(
        stable=False,
        blocking_witness=witness,
        prices_at_witness=_to_schedule(i, j, scan.low[i, j], scan.high[i, j]),
        compositions_checked=checked,
        grand_prices=scan.grand,
        witness_saving=float(scan.saving[i, j]),
        blocking_count=int(scan.blocks.sum()),
    )


def is_core_stable(
    scheme, pop: Population, params: CostParams, epsilon: float = DEFAULT_EPSILON
) -> StabilityReport:
    """Enumerate every sub-composition and look for a blocking one.

    A blocking composition must save each of its present types more than
    ``epsilon`` per person. When several block, the witness is the one whose
    members' smallest per-person saving is largest; remaining ties go to the
    larger ``n_low``, then the larger ``n_high``.
    """
    scan = _scan(get_scheme(scheme), pop, params, epsilon)
    return _report(scan, _best(scan) if scan.blocks.any() else None)


def evensplit_condition(pop: Population, params: CostParams) -> bool:
    """Whether the grand even-split price undercuts the low-risk stand-alone price.

    This single inequality is equivalent to core stability of even-split
    pricing. A pool with no high-risk members makes both sides equal; it is
    reported as ``True`` since nobody can do strictly better alone.
    """
    N_low, N_high = pop.grand
    if N_low == 0:
        raise DomainError("the even-split condition needs at least one low-risk member")
    if N_high == 0:
        return True
    return cost((N_low, N_high), pop, params) / (N_low + N_high) < cost((N_low, 0), pop, params) / N_low


def locate_evensplit_flip(
    pop: Population, params: CostParams, lo: float, hi: float, tol: float = 1e-10
) -> Optional[float]:
    """Bisect ``r_high`` on ``[lo, hi]`` for the point where the even-split condition flips.

    Returns ``None`` when the condition has the same value at both ends.
    """
    at = lambda r: evensplit_condition(pop.with_risks(pop.low.r, r, strict=False), params)
    c_lo, c_hi = at(lo), at(hi)
    if c_lo == c_hi:
        return None
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if at(mid) == c_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class PerturbedMaxSubsidy(PricingScheme):
    """Max-subsidy with high-risk members charged ``delta`` less.

    Low-risk members make up the shortfall, ``delta * n_high / n_low`` each;
    pools without low-risk members keep the unperturbed price.
    """

    vectorized = True

    def __init__(self, delta: float):
        if delta < 0:
            raise DomainError("subsidy perturbation must be non-negative")
        self.delta = delta
        self.name = f"max_subsidy-{delta:g}"

    def price(self, comp, pop, params):
        base = get_scheme("max_subsidy").price(comp, pop, params)
        n_low, n_high = comp
        if not (n_low and n_high):
            return base
        return PriceSchedule(
            base.price_low + self.delta * n_high / n_low, base.price_high - self.delta
        )

    def price_grid(self, pop, params):
        low, high = get_scheme("max_subsidy").price_grid(pop, params)
        a, b = _grids(pop)
        mixed = (a > 0) & (b > 0)
        with np.errstate(invalid="ignore", divide="ignore"):
            low = np.where(mixed, low + self.delta * b / a, low)
            high = np.where(mixed, high - self.delta, high)
        return _mask_absent(low, high)


def max_subsidy_tightness(
    pop: Population, params: CostParams, epsilon_subsidy: float, epsilon: float = DEFAULT_EPSILON
) -> StabilityReport:
    """Stability of max-subsidy after lowering the high-risk price by ``epsilon_subsidy``.

    Any positive perturbation lets the low-risk members block on their own.
    """
    if pop.low.count == 0 or pop.high.count == 0:
        raise DomainError("tightness needs both risk types present")
    return is_core_stable(PerturbedMaxSubsidy(epsilon_subsidy), pop, params, epsilon)


@dataclass(frozen=True)
class CascadeStep:
    step: int
    departing: PoolComposition
    remaining: PoolComposition
    prices_before: PriceSchedule
    prices_departing: PriceSchedule
    prices_after: Optional[PriceSchedule]


@dataclass(frozen=True)
class CascadeTrace:
    scheme: str
    policy: str
    steps: list[CascadeStep] = field(default_factory=list)
    final: Optional[PoolComposition] = None

    def __len__(self):
        return len(self.steps)


def _select(scan: _Scan, policy: str) -> PoolComposition:
    if policy == "low_risk_exodus":
        low_only = np.nonzero(scan.blocks[:, 0])[0]
        if low_only.size:
            return PoolComposition(int(low_only.max()), 0)
    return _best(scan)


def cascade(
    scheme, pop: Population, params: CostParams, policy: CascadePolicy = "best_blocking",
    epsilon: float = DEFAULT_EPSILON,
) -> CascadeTrace:
    """Let blocking groups leave one at a time until the remaining pool is stable.

    ``best_blocking`` removes the group :func:`is_core_stable` would report.
    ``low_risk_exodus`` prefers the largest all-low-risk blocking group and
    falls back to ``best_blocking`` when no such group exists. Departing
    groups leave together and are not tracked afterwards.
    """
    if policy not in ("best_blocking", "low_risk_exodus"):
        raise DomainError(f"unknown cascade policy {policy!r}")
    scheme = get_scheme(scheme)
    current = pop
    steps: list[CascadeStep] = []
    while current.size:
        scan = _scan(scheme, current, params, epsilon)
        if not scan.blocks.any():
            break
        leave = _select(scan, policy)
        N_low, N_high = current.grand
        rest = PoolComposition(N_low - leave.n_low, N_high - leave.n_high)
        after = scheme.price(rest, current, params) if rest.size else None
        steps.append(
            CascadeStep(
                step=len(steps) + 1,
                departing=leave,
                remaining=rest,
                prices_before=scan.grand,
                prices_departing=_to_schedule(
                    *leave, scan.low[leave.n_low, leave.n_high], scan.high[leave.n_low, leave.n_high]
                ),
                prices_after=after,
            )
        )
        current = current.with_counts(*rest)
    return CascadeTrace(scheme.name, policy, steps, current.grand)
