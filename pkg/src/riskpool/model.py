"""Two-type risk pools and their premium cost functions.

A pool is described only by how many low-risk and high-risk members it holds;
members of the same type are interchangeable, so every set-valued quantity of
the cost-sharing game reduces to the ``(n_low, n_high)`` lattice.

Two cost models are supported:

``expected_value``
    ``V * (r_low * n_low + r_high * n_high)`` -- linear, no pooling benefit.
``insolvency``
    ``V * (mu + b_p * sigma)`` where ``mu`` and ``sigma`` are the mean and
    standard deviation of the claim count under the normal approximation.
    This is strictly submodular, so pooling always lowers total cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Literal, NamedTuple, Optional

import numpy as np

from .errors import DomainError

RiskType = Literal["low", "high"]
CostModel = Literal["expected_value", "insolvency"]
COST_MODELS = ("expected_value", "insolvency")


def variance_factor(r):
    """Per-member claim-count variance ``r * (1 - r)``."""
    return r * (1.0 - r)


@dataclass(frozen=True)
class RiskProfile:
    r: float
    count: int

    def __post_init__(self):
        if not (0.0 <= self.r < 1.0) or math.isnan(self.r):
            raise DomainError(f"loss probability must lie in [0, 1), got {self.r!r}")
        if int(self.count) != self.count or self.count < 0:
            raise DomainError(f"count must be a non-negative integer, got {self.count!r}")
        object.__setattr__(self, "count", int(self.count))

    @property
    def variance(self) -> float:
        return variance_factor(self.r)


class PoolComposition(NamedTuple):
    """A coalition holding ``n_low`` low-risk and ``n_high`` high-risk members."""

    n_low: int
    n_high: int

    @property
    def size(self) -> int:
        return self.n_low + self.n_high

    def add(self, kind: RiskType, k: int = 1) -> "PoolComposition":
        if kind == "low":
            return PoolComposition(self.n_low + k, self.n_high)
        if kind == "high":
            return PoolComposition(self.n_low, self.n_high + k)
        raise DomainError(f"unknown risk type {kind!r}")


@dataclass(frozen=True)
class Population:
    """The two risk classes making up the grand coalition.

    With ``strict=True`` the usual ordering ``r_low < r_high < 0.5`` is
    enforced. Probe mode (``strict=False``) only requires ``0 <= r < 1``;
    the limit arguments behind the incentive audit need ``r_high -> 0``
    with ``r_low`` fixed.
    """

    low: RiskProfile
    high: RiskProfile
    strict: bool = True

    def __post_init__(self):
        if self.strict:
            if not self.high.r < 0.5:
                raise DomainError(f"strict mode requires r_high < 0.5, got {self.high.r}")
            if not self.low.r < self.high.r:
                raise DomainError(
                    f"strict mode requires r_low < r_high, got {self.low.r} >= {self.high.r}"
                )

    @classmethod
    def of(cls, r_low: float, r_high: float, n_low: int, n_high: int, strict: bool = True):
        return cls(RiskProfile(r_low, n_low), RiskProfile(r_high, n_high), strict=strict)

    @property
    def grand(self) -> PoolComposition:
        return PoolComposition(self.low.count, self.high.count)

    @property
    def size(self) -> int:
        return self.low.count + self.high.count

    def with_counts(self, n_low: int, n_high: int) -> "Population":
        return replace(self, low=replace(self.low, count=n_low), high=replace(self.high, count=n_high))

    def with_risks(self, r_low: float, r_high: float, strict: Optional[bool] = None) -> "Population":
        return Population(
            RiskProfile(r_low, self.low.count),
            RiskProfile(r_high, self.high.count),
            strict=self.strict if strict is None else strict,
        )

    def probe(self) -> "Population":
        return replace(self, strict=False)

    def validate(self, comp) -> PoolComposition:
        """Return ``comp`` as a :class:`PoolComposition`, checking it fits in the population."""
        n_low, n_high = comp
        if int(n_low) != n_low or int(n_high) != n_high or n_low < 0 or n_high < 0:
            raise DomainError(f"composition counts must be non-negative integers, got {tuple(comp)}")
        if n_low > self.low.count or n_high > self.high.count:
            raise DomainError(
                f"composition ({n_low}, {n_high}) exceeds population "
                f"({self.low.count}, {self.high.count})"
            )
        return PoolComposition(int(n_low), int(n_high))


@dataclass(frozen=True)
class CostParams:
    """Premium-calculation parameters.

    ``capital_multiplier`` scales the safety buffer ``b_p * sigma``; it models
    an insurer charging for the opportunity cost of reserve capital and is 1
    by default.
    """

    V: float
    b_p: float = 0.0
    model: CostModel = "insolvency"
    capital_multiplier: float = field(default=1.0)

    def __post_init__(self):
        if self.model not in COST_MODELS:
            raise DomainError(f"unknown cost model {self.model!r}")
        if not self.V > 0 or not math.isfinite(self.V):
            raise DomainError(f"insured value V must be positive, got {self.V!r}")
        if self.model == "insolvency" and not (self.b_p > 0 and math.isfinite(self.b_p)):
            raise DomainError(f"insolvency model requires b_p > 0, got {self.b_p!r}")
        if not self.capital_multiplier > 0:
            raise DomainError("capital_multiplier must be positive")

    @property
    def buffer(self) -> float:
        """Effective multiplier on the standard deviation (0 for expected-value)."""
        if self.model == "expected_value":
            return 0.0
        return self.b_p * self.capital_multiplier


def pool_cost(n_low, n_high, r_low, r_high, V, buffer):
    """Vectorised cost kernel; accepts scalars or broadcastable arrays."""
    var = n_low * variance_factor(r_low) + n_high * variance_factor(r_high)
    return V * (r_low * n_low + r_high * n_high + buffer * np.sqrt(var))


def cost(comp, pop: Population, params: CostParams) -> float:
    """Total premium a pool of composition ``comp`` must collect."""
    n_low, n_high = pop.validate(comp)
    var = n_low * pop.low.variance + n_high * pop.high.variance
    return params.V * (
        pop.low.r * n_low + pop.high.r * n_high + params.buffer * math.sqrt(var)
    )


def cost_grid(pop: Population, params: CostParams) -> np.ndarray:
    """Costs of every sub-composition as an ``(N_low + 1, N_high + 1)`` array."""
    a = np.arange(pop.low.count + 1, dtype=float)[:, None]
    b = np.arange(pop.high.count + 1, dtype=float)[None, :]
    return pool_cost(a, b, pop.low.r, pop.high.r, params.V, params.buffer)


def marginal_cost(comp, add_type: RiskType, pop: Population, params: CostParams) -> float:
    """Cost increase from adding one member of ``add_type`` to ``comp``.

    The square-root difference is rewritten as ``R / (sqrt(s + R) + sqrt(s))``
    so large pools do not lose the increment to cancellation.
    """
    base = pop.validate(comp)
    pop.validate(base.add(add_type))
    r = pop.low.r if add_type == "low" else pop.high.r
    added = variance_factor(r)
    s = base.n_low * pop.low.variance + base.n_high * pop.high.variance
    denom = math.sqrt(s + added) + math.sqrt(s)
    spread = added / denom if denom > 0 else 0.0
    return params.V * (r + params.buffer * spread)


@dataclass(frozen=True)
class SubmodularityReport:
    passed: bool
    pairs_checked: int
    violations: int
    strict_failures: int
    counterexample: Optional[tuple[PoolComposition, PoolComposition]] = None
    gap: Optional[float] = None


def _overlap_check(parts: np.ndarray, pop: Population, params: CostParams, tol: float):
    # parts columns: low-only-in-S, low-only-in-T, low-in-both, then the same for high
    l1, l2, l3, h1, h2, h3 = (parts[:, i].astype(float) for i in range(6))
    f = lambda a, b: pool_cost(a, b, pop.low.r, pop.high.r, params.V, params.buffer)
    lhs = f(l1 + l3, h1 + h3) + f(l2 + l3, h2 + h3)
    rhs = f(l1 + l2 + l3, h1 + h2 + h3) + f(l3, h3)
    gap = lhs - rhs
    scale = np.maximum(np.abs(lhs), 1.0)
    violated = gap < -tol * scale
    incomparable = ((l1 + h1) > 0) & ((l2 + h2) > 0)
    # strictness is only promised when the types carry variance
    has_var = pop.low.variance > 0 and pop.high.variance > 0 and params.buffer > 0
    not_strict = incomparable & (gap <= tol * scale) if has_var else np.zeros_like(violated)
    bad = violated | not_strict
    first = None
    first_gap = None
    if bad.any():
        i = int(np.argmax(bad))
        s = PoolComposition(int(l1[i] + l3[i]), int(h1[i] + h3[i]))
        t = PoolComposition(int(l2[i] + l3[i]), int(h2[i] + h3[i]))
        first, first_gap = (s, t), float(gap[i])
    return SubmodularityReport(
        passed=not bad.any(),
        pairs_checked=len(parts),
        violations=int(violated.sum()),
        strict_failures=int(not_strict.sum()),
        counterexample=first,
        gap=first_gap,
    )


def _random_split(rng: np.random.Generator, total: int, trials: int) -> np.ndarray:
    # uniform draw of (only-S, only-T, both) with sum <= total
    used = rng.integers(0, total + 1, size=trials)
    cuts = np.sort(rng.random((trials, 2)), axis=1)
    a = np.floor(cuts[:, 0] * (used + 1)).astype(int)
    b = np.floor(cuts[:, 1] * (used + 1)).astype(int)
    a, b = np.minimum(a, used), np.minimum(b, used)
    return np.stack([a, b - a, used - b], axis=1)


def check_submodularity(
    pop: Population, params: CostParams, trials: int = 10_000, seed: int = 0, tol: float = 1e-12
) -> SubmodularityReport:
    """Randomised check of ``c(S) + c(T) >= c(S | T) + c(S & T)``.

    Pairs are drawn through their overlap decomposition: per type, the number
    of members only in ``S``, only in ``T`` and in both. Strictness is
    required whenever neither set contains the other.
    """
    if trials <= 0:
        raise DomainError("trials must be positive")
    rng = np.random.default_rng(seed)
    low = _random_split(rng, pop.low.count, trials)
    high = _random_split(rng, pop.high.count, trials)
    return _overlap_check(np.hstack([low, high]), pop, params, tol)


def check_submodularity_exhaustive(
    pop: Population, params: CostParams, max_count: int = 6, tol: float = 1e-12
) -> SubmodularityReport:
    """Every overlap decomposition with at most ``max_count`` members per type."""
    splits = [
        (i, j, k)
        for i in range(max_count + 1)
        for j in range(max_count + 1 - i)
        for k in range(max_count + 1 - i - j)
    ]
    arr = np.array(splits)
    idx_l, idx_h = np.meshgrid(np.arange(len(arr)), np.arange(len(arr)), indexing="ij")
    parts = np.hstack([arr[idx_l.ravel()], arr[idx_h.ravel()]])
    return _overlap_check(parts, pop, params, tol)
