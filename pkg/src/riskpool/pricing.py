"""Pricing schemes: how a pool's cost is split between its two risk types.

Every scheme is anonymous (prices depend only on counts and risks) and
efficient (``n_low * price_low + n_high * price_high == cost``). A price is
``None`` exactly when the composition has no members of that type.

Schemes are registered under stable identifiers used by scenario files and the
command line: ``even_split``, ``proportional``, ``max_subsidy`` and
``shapley``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from . import kernels
from .errors import CapabilityError, DomainError
from .model import CostParams, Population, PoolComposition, cost, cost_grid, pool_cost

SHAPLEY_MAX_MEMBERS = 100_000


class PriceSchedule(NamedTuple):
    price_low: Optional[float]
    price_high: Optional[float]

    def total(self, comp) -> float:
        n_low, n_high = comp
        out = 0.0
        if n_low:
            out += n_low * self.price_low
        if n_high:
            out += n_high * self.price_high
        return out

    def for_type(self, kind: str) -> Optional[float]:
        return self.price_low if kind == "low" else self.price_high


def _schedule(comp, low: float, high: float) -> PriceSchedule:
    n_low, n_high = comp
    return PriceSchedule(float(low) if n_low else None, float(high) if n_high else None)


def _nonempty(comp, pop: Population) -> PoolComposition:
    comp = pop.validate(comp)
    if comp.size == 0:
        raise DomainError("prices are undefined for the empty pool")
    return comp


def _grids(pop: Population):
    a = np.arange(pop.low.count + 1, dtype=float)[:, None]
    b = np.arange(pop.high.count + 1, dtype=float)[None, :]
    return a, b


def _mask_absent(low: np.ndarray, high: np.ndarray):
    low = np.array(low, dtype=float)
    high = np.array(high, dtype=float)
    low[0, :] = np.nan
    high[:, 0] = np.nan
    return low, high


def even_split(comp, pop: Population, params: CostParams) -> PriceSchedule:
    comp = _nonempty(comp, pop)
    avg = cost(comp, pop, params) / comp.size
    return _schedule(comp, avg, avg)


def proportional(comp, pop: Population, params: CostParams) -> PriceSchedule:
    """Expected loss plus a variance-weighted share of the pooled safety buffer.

    ``price_type = V * (r_type + b_p * R_type / sqrt(n_low R_low + n_high R_high))``
    """
    _require_insolvency(params, "proportional")
    comp = _nonempty(comp, pop)
    R_low, R_high = pop.low.variance, pop.high.variance
    sd = math.sqrt(comp.n_low * R_low + comp.n_high * R_high)
    if sd == 0.0:
        return _schedule(comp, params.V * pop.low.r, params.V * pop.high.r)
    V, buf = params.V, params.buffer
    return _schedule(comp, V * (pop.low.r + buf * R_low / sd), V * (pop.high.r + buf * R_high / sd))


def max_subsidy(comp, pop: Population, params: CostParams) -> PriceSchedule:
    """Low-risk members pay their stand-alone average; high-risk members pay the rest."""
    comp = _nonempty(comp, pop)
    total = cost(comp, pop, params)
    if comp.n_low == 0:
        return _schedule(comp, math.nan, total / comp.n_high)
    alone = cost((comp.n_low, 0), pop, params)
    high = (total - alone) / comp.n_high if comp.n_high else math.nan
    return _schedule(comp, alone / comp.n_low, high)


def shapley_exact(comp, pop: Population, params: CostParams) -> PriceSchedule:
    """Exact Shapley cost shares via the two-type composition reduction.

    A member's arrival position is uniform and, given ``k`` predecessors, the
    number of same-type predecessors is hypergeometric, so the ``2^n`` subset
    sum collapses to ``O(n_low * n_high)`` terms.
    """
    comp = _nonempty(comp, pop)
    if comp.size > SHAPLEY_MAX_MEMBERS:
        raise CapabilityError(
            f"exact Shapley is limited to {SHAPLEY_MAX_MEMBERS} members, got {comp.size}"
        )
    low, high = kernels.shapley_two_type(
        comp.n_low, comp.n_high, pop.low.r, pop.high.r, params.V, params.buffer
    )
    return _schedule(comp, low, high)


@dataclass(frozen=True)
class ShapleyEstimate:
    prices: PriceSchedule
    stderr_low: Optional[float]
    stderr_high: Optional[float]
    permutations: int


def shapley_sampled(
    comp, pop: Population, params: CostParams, permutations: int = 10_000, seed: int = 0,
    batch: int = 2_000,
) -> ShapleyEstimate:
    """Monte-Carlo Shapley shares from random arrival orders.

    Each permutation yields one unbiased estimate per type (the mean marginal
    cost of that type's members in the order); the reported error is the
    standard error of those per-permutation estimates.
    """
    comp = _nonempty(comp, pop)
    if permutations <= 0:
        raise DomainError("permutations must be positive")
    rng = np.random.default_rng(seed)
    labels = np.concatenate([np.zeros(comp.n_low, bool), np.ones(comp.n_high, bool)])
    est_low: list[np.ndarray] = []
    est_high: list[np.ndarray] = []
    done = 0
    while done < permutations:
        m = min(batch, permutations - done)
        order = rng.permuted(np.broadcast_to(labels, (m, labels.size)), axis=1)
        highs = np.cumsum(order, axis=1)
        lows = np.arange(1, labels.size + 1)[None, :] - highs
        after = pool_cost(lows, highs, pop.low.r, pop.high.r, params.V, params.buffer)
        before = np.concatenate([np.zeros((m, 1)), after[:, :-1]], axis=1)
        marg = after - before
        if comp.n_low:
            est_low.append(np.where(order, 0.0, marg).sum(axis=1) / comp.n_low)
        if comp.n_high:
            est_high.append(np.where(order, marg, 0.0).sum(axis=1) / comp.n_high)
        done += m

    def summarize(parts):
        if not parts:
            return math.nan, None
        x = np.concatenate(parts)
        err = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else math.inf
        return float(x.mean()), err

    low, se_low = summarize(est_low)
    high, se_high = summarize(est_high)
    return ShapleyEstimate(_schedule(comp, low, high), se_low, se_high, permutations)


def _require_insolvency(params: CostParams, name: str):
    if params.model != "insolvency":
        raise CapabilityError(f"{name} pricing is defined only for the insolvency cost model")


class PricingScheme:
    """Maps a composition to per-type prices.

    Subclasses implement :meth:`price`; :meth:`price_grid` prices every
    sub-composition of a population at once and may be overridden with a
    vectorised version. Prices must depend only on the counts and risks,
    which is what lets stability checks enumerate compositions instead of
    player subsets.
    """

    name = "custom"
    vectorized = False

    def price(self, comp, pop: Population, params: CostParams) -> PriceSchedule:
        raise NotImplementedError

    def __call__(self, comp, pop, params):
        return self.price(comp, pop, params)

    def price_grid(self, pop: Population, params: CostParams):
        shape = (pop.low.count + 1, pop.high.count + 1)
        low, high = np.full(shape, np.nan), np.full(shape, np.nan)
        for i in range(shape[0]):
            for j in range(shape[1]):
                if i == 0 and j == 0:
                    continue
                s = self.price((i, j), pop, params)
                if s.price_low is not None:
                    low[i, j] = s.price_low
                if s.price_high is not None:
                    high[i, j] = s.price_high
        return low, high

    def __repr__(self):
        return f"<{type(self).__name__} {self.name!r}>"


class EvenSplit(PricingScheme):
    name = "even_split"
    vectorized = True

    def price(self, comp, pop, params):
        return even_split(comp, pop, params)

    def price_grid(self, pop, params):
        a, b = _grids(pop)
        with np.errstate(invalid="ignore", divide="ignore"):
            avg = cost_grid(pop, params) / (a + b)
        return _mask_absent(avg, avg)


class Proportional(PricingScheme):
    name = "proportional"
    vectorized = True

    def price(self, comp, pop, params):
        return proportional(comp, pop, params)

    def price_grid(self, pop, params):
        _require_insolvency(params, "proportional")
        a, b = _grids(pop)
        R_low, R_high = pop.low.variance, pop.high.variance
        sd = np.sqrt(a * R_low + b * R_high)
        with np.errstate(invalid="ignore", divide="ignore"):
            low = np.where(sd > 0, params.V * (pop.low.r + params.buffer * R_low / sd),
                           params.V * pop.low.r)
            high = np.where(sd > 0, params.V * (pop.high.r + params.buffer * R_high / sd),
                            params.V * pop.high.r)
        return _mask_absent(low, high)


class MaxSubsidy(PricingScheme):
    name = "max_subsidy"
    vectorized = True

    def price(self, comp, pop, params):
        return max_subsidy(comp, pop, params)

    def price_grid(self, pop, params):
        a, b = _grids(pop)
        c = cost_grid(pop, params)
        alone = c[:, :1]
        with np.errstate(invalid="ignore", divide="ignore"):
            low = np.broadcast_to(alone / a, c.shape)
            high = np.where(a == 0, c / b, (c - alone) / b)
        return _mask_absent(low, high)


class Shapley(PricingScheme):
    """Shapley pricing.

    Single compositions use the composition sum of :func:`shapley_exact`;
    whole grids use the last-arrival recursion, which fills every cell from
    its two predecessors in constant time.
    """

    name = "shapley"
    vectorized = True

    def price(self, comp, pop, params):
        return shapley_exact(comp, pop, params)

    def price_grid(self, pop, params):
        return kernels.shapley_grid(
            pop.low.count, pop.high.count, pop.low.r, pop.high.r, params.V, params.buffer
        )


class FunctionScheme(PricingScheme):
    """Adapter turning a plain ``f(comp, pop, params) -> PriceSchedule`` into a scheme."""

    def __init__(self, name: str, fn: Callable):
        self.name = name
        self._fn = fn

    def price(self, comp, pop, params):
        return self._fn(pop.validate(comp), pop, params)


SCHEMES: dict[str, PricingScheme] = {
    s.name: s for s in (EvenSplit(), Proportional(), MaxSubsidy(), Shapley())
}


def get_scheme(name) -> PricingScheme:
    if isinstance(name, PricingScheme):
        return name
    try:
        return SCHEMES[name]
    except KeyError:
        raise DomainError(
            f"unknown pricing scheme {name!r}; expected one of {sorted(SCHEMES)}"
        ) from None
