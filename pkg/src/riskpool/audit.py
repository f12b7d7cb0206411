"""Numerical audits of pricing schemes against fairness properties.

Two impossibility results constrain any scheme over a strictly submodular
cost:

* efficiency, a low-risk price independent of ``(r_high, n_high)`` and a
  high-risk price independent of ``(r_low, n_low)`` cannot all hold;
* efficiency, aligned incentives (the low-risk price rises with ``r_high``
  near ``r_high = 0``) and stability at every risk level cannot all hold.

The auditor measures each property on probe grids and reports which pass.
It never certifies a theorem; it checks that the forbidden pattern does not
show up.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import CapabilityError, DomainError
from .model import CostParams, Population, PoolComposition, cost, cost_grid
from .pricing import PricingScheme, get_scheme
from .stability import DEFAULT_EPSILON, is_core_stable

EFFICIENCY_RTOL = 1e-9
INDEPENDENCE_RTOL = 1e-6
FD_STEP = 1e-6
LIMIT_SEQUENCE = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8)
# full composition enumeration is used up to this many cells
FULL_SCAN_CELLS = 1_000_000


def _price_scale(pop: Population, params: CostParams) -> float:
    return cost(pop.grand, pop, params) / pop.size


def _price(scheme: PricingScheme, comp, pop, params, kind: str) -> float:
    value = scheme.price(comp, pop, params).for_type(kind)
    return math.nan if value is None else value


def finite_difference_slope(
    scheme, comp, pop: Population, params: CostParams, kind: str = "low",
    wrt: str = "high", h_rel: float = FD_STEP,
) -> float:
    """Central difference of ``kind``'s price with respect to ``r_wrt``.

    The step is ``h_rel * r`` (floored at ``1e-12``), one-sided if the
    central stencil would leave ``[0, 1)``.
    """
    scheme = get_scheme(scheme)
    probe = pop.probe()
    r = probe.high.r if wrt == "high" else probe.low.r
    h = max(h_rel * r, 1e-12)

    def at(x):
        shifted = probe.with_risks(x, probe.high.r) if wrt == "low" else probe.with_risks(probe.low.r, x)
        return _price(scheme, comp, shifted, params, kind)

    if r - h < 0:
        return (at(r + h) - at(r)) / h
    if r + h >= 1:
        return (at(r) - at(r - h)) / h
    return (at(r + h) - at(r - h)) / (2 * h)


def proportional_low_slope(comp, pop: Population, params: CostParams) -> float:
    """Closed-form derivative of the proportional low-risk price in ``r_high``."""
    n_low, n_high = comp
    R_low = pop.low.variance
    s = n_low * R_low + n_high * pop.high.variance
    return -params.V * params.buffer * R_low * n_high * (1 - 2 * pop.high.r) / (2 * s ** 1.5)


@dataclass(frozen=True)
class EfficiencyAudit:
    max_abs: float
    max_rel: float
    worst: Optional[PoolComposition]
    compositions: int

    @property
    def passed(self) -> bool:
        return self.max_rel <= EFFICIENCY_RTOL


def default_grid(pop: Population, points: int = 6) -> list[PoolComposition]:
    lows = sorted({int(round(x)) for x in np.linspace(0, pop.low.count, points)})
    highs = sorted({int(round(x)) for x in np.linspace(0, pop.high.count, points)})
    return [PoolComposition(a, b) for a in lows for b in highs if a or b]


def audit_efficiency(
    scheme, pop: Population, params: CostParams, grid: Optional[Sequence] = None
) -> EfficiencyAudit:
    """Largest ``|n_low p_low + n_high p_high - cost|`` over the grid.

    Without an explicit grid, vectorised schemes are checked on every
    sub-composition and the rest on :func:`default_grid`.
    """
    scheme = get_scheme(scheme)
    if grid is None and scheme.vectorized:
        low, high = scheme.price_grid(pop, params)
        c = cost_grid(pop, params)
        a = np.arange(pop.low.count + 1)[:, None]
        b = np.arange(pop.high.count + 1)[None, :]
        paid = np.where(a > 0, a * np.nan_to_num(low), 0.0) + np.where(b > 0, b * np.nan_to_num(high), 0.0)
        resid = np.abs(paid - c)
        resid[0, 0] = 0.0
        rel = resid / np.maximum(np.abs(c), np.finfo(float).tiny)
        rel[0, 0] = 0.0
        i, j = np.unravel_index(int(np.argmax(resid)), resid.shape)
        return EfficiencyAudit(float(resid.max()), float(rel.max()), PoolComposition(int(i), int(j)), resid.size - 1)
    comps = [pop.validate(c) for c in (grid if grid is not None else default_grid(pop))]
    worst, max_abs, max_rel = None, 0.0, 0.0
    for comp in comps:
        c = cost(comp, pop, params)
        r = abs(scheme.price(comp, pop, params).total(comp) - c)
        if worst is None or r > max_abs:
            worst, max_abs = comp, r
        max_rel = max(max_rel, r / c if c > 0 else (0.0 if r == 0 else math.inf))
    return EfficiencyAudit(max_abs, max_rel, worst, len(comps))


@dataclass(frozen=True)
class IndependenceAudit:
    low: float
    high: float
    threshold: float
    skipped: list[str] = field(default_factory=list)

    @property
    def low_passes(self) -> bool:
        return self.low <= self.threshold

    @property
    def high_passes(self) -> bool:
        return self.high <= self.threshold


def audit_independence(
    scheme, pop: Population, params: CostParams, probes: Optional[Sequence] = None,
    h_rel: float = FD_STEP, rtol: float = INDEPENDENCE_RTOL,
) -> IndependenceAudit:
    """How much each type's price moves with the *other* type's risk and count.

    For the low-risk price this is ``|d p_low / d r_high|`` and
    ``|p_low(n_low, n_high) - p_low(n_low, n_high - 1)|`` at every probe
    composition; the high-risk side is symmetric. A side passes when all its
    magnitudes stay within ``rtol`` times the grand coalition's mean price.
    """
    scheme = get_scheme(scheme)
    if probes is None:
        N_low, N_high = pop.grand
        probes = [pop.grand, PoolComposition(max(N_low // 2, 1), max(N_high // 2, 1))]
    scale = _price_scale(pop, params)
    worst = {"low": 0.0, "high": 0.0}
    skipped: list[str] = []
    for comp in probes:
        try:
            comp = pop.validate(comp)
        except DomainError as exc:
            skipped.append(f"{tuple(comp)}: {exc}")
            continue
        for kind, other in (("low", "high"), ("high", "low")):
            own = comp.n_low if kind == "low" else comp.n_high
            other_n = comp.n_high if kind == "low" else comp.n_low
            if own == 0:
                skipped.append(f"{tuple(comp)}: no {kind}-risk members to price")
                continue
            try:
                slope = finite_difference_slope(scheme, comp, pop, params, kind, other, h_rel)
                mags = [abs(slope)]
                if other_n > 0:
                    fewer = comp.add(other, -1)
                    mags.append(abs(_price(scheme, comp, pop, params, kind)
                                    - _price(scheme, fewer, pop, params, kind)))
            except (DomainError, CapabilityError) as exc:
                skipped.append(f"{tuple(comp)} [{kind}]: {exc}")
                continue
            worst[kind] = max(worst[kind], *mags)
    return IndependenceAudit(worst["low"], worst["high"], rtol * scale, skipped)


@dataclass(frozen=True)
class AlignedAudit:
    slopes: list[tuple[float, float]]
    aligned: bool
    anti_social: bool
    limit_c: Optional[float]
    limit_status: str
    stability: list[tuple[float, bool]]
    stability_method: str
    efficient: bool
    notes: list[str] = field(default_factory=list)

    @property
    def stable_for_all(self) -> bool:
        return bool(self.stability) and all(ok for _, ok in self.stability)

    @property
    def forbidden_pattern(self) -> bool:
        return self.efficient and self.aligned and self.stable_for_all


def _homogeneous_stable(scheme, pop, params, epsilon) -> bool:
    # blocking by either stand-alone pool; the only deviations that matter for the
    # incentive argument
    grand = scheme.price(pop.grand, pop, params)
    N_low, N_high = pop.grand
    if N_low and cost((N_low, 0), pop, params) / N_low < grand.price_low - epsilon:
        return False
    if N_high and cost((0, N_high), pop, params) / N_high < grand.price_high - epsilon:
        return False
    return True


def _limit(values: list[float], scale: float):
    diffs = [abs(b - a) for a, b in zip(values, values[1:])]
    if not all(math.isfinite(v) for v in values):
        return None, "hypothesis not met: non-finite prices"
    shrinking = all(d2 <= d1 * 1.0001 + 1e-12 * scale for d1, d2 in zip(diffs[-3:], diffs[-2:]))
    if shrinking and diffs[-1] <= 1e-3 * scale:
        return values[-1], "converged"
    return None, "hypothesis not met: no stable limit"


def audit_aligned_incentives(
    scheme, pop: Population, params: CostParams,
    r_interval: Optional[tuple[float, float]] = None, points: int = 8,
    epsilon: float = DEFAULT_EPSILON,
) -> AlignedAudit:
    """Slope of the low-risk price in ``r_high`` on an interval reaching towards 0.

    ``aligned`` holds when every sampled slope is strictly positive. The
    limit of the high-risk price as ``r_high -> 0`` is estimated along
    ``LIMIT_SEQUENCE``. Stability is checked at every sampled risk level, by
    full enumeration for vectorised schemes on grids up to
    ``FULL_SCAN_CELLS`` and otherwise against the two stand-alone pools.
    """
    scheme = get_scheme(scheme)
    probe = pop.probe()
    lo, hi = r_interval if r_interval is not None else (0.0, pop.high.r)
    if not (0.0 <= lo < hi < 1.0):
        raise DomainError(f"invalid risk interval ({lo}, {hi})")
    start = max(lo, hi * 1e-3)
    rs = [float(x) for x in np.geomspace(start, hi, points)]
    comp = pop.grand
    notes: list[str] = []

    slopes = []
    for r in rs:
        shifted = probe.with_risks(probe.low.r, r)
        try:
            slopes.append((r, finite_difference_slope(scheme, comp, shifted, params, "low", "high")))
        except (DomainError, CapabilityError) as exc:
            notes.append(f"slope at r_high={r:g}: {exc}")
    values = [s for _, s in slopes]
    aligned = bool(values) and all(s > 0 for s in values)
    anti_social = bool(values) and all(s < 0 for s in values)

    limit_vals = []
    for r in LIMIT_SEQUENCE:
        try:
            limit_vals.append(_price(scheme, comp, probe.with_risks(probe.low.r, r), params, "high"))
        except (DomainError, CapabilityError) as exc:
            notes.append(f"limit at r_high={r:g}: {exc}")
            limit_vals.append(math.nan)
    scale = _price_scale(pop, params)
    limit_c, limit_status = (
        _limit(limit_vals, scale) if comp.n_high else (None, "hypothesis not met: no high-risk members")
    )

    full = scheme.vectorized and (pop.low.count + 1) * (pop.high.count + 1) <= FULL_SCAN_CELLS
    method = "full enumeration" if full else "stand-alone pools"
    stability = []
    efficient = True
    for r in rs:
        shifted = probe.with_risks(probe.low.r, r)
        try:
            ok = (is_core_stable(scheme, shifted, params, epsilon).stable if full
                  else _homogeneous_stable(scheme, shifted, params, epsilon))
            total = cost(comp, shifted, params)
            paid = scheme.price(comp, shifted, params).total(comp)
            efficient &= abs(paid - total) <= EFFICIENCY_RTOL * max(total, 1e-300)
        except (DomainError, CapabilityError) as exc:
            notes.append(f"stability at r_high={r:g}: {exc}")
            continue
        stability.append((r, bool(ok)))
    return AlignedAudit(slopes, aligned, anti_social, limit_c, limit_status, stability,
                        method, bool(efficient), notes)


@dataclass(frozen=True)
class AuditReport:
    scheme: str
    efficiency: EfficiencyAudit
    independence: IndependenceAudit
    incentives: AlignedAudit

    @property
    def efficiency_residual(self) -> float:
        return self.efficiency.max_abs

    @property
    def verdicts(self) -> dict[str, bool]:
        return {
            "efficiency": self.efficiency.passed,
            "independence_low": self.independence.low_passes,
            "independence_high": self.independence.high_passes,
            "aligned": self.incentives.aligned,
            "stable_for_all_probed_r": self.incentives.stable_for_all,
        }

    @property
    def impossibility_consistent(self) -> dict[str, bool]:
        v = self.verdicts
        return {
            "efficiency+independence": not (
                v["efficiency"] and v["independence_low"] and v["independence_high"]
            ),
            "efficiency+aligned+stable": not (
                v["efficiency"] and v["aligned"] and v["stable_for_all_probed_r"]
            ),
        }

    def to_dict(self) -> dict:
        slopes = [s for _, s in self.incentives.slopes]
        return {
            "scheme": self.scheme,
            "efficiency_residual": self.efficiency.max_abs,
            "efficiency_relative": self.efficiency.max_rel,
            "independence_low": self.independence.low,
            "independence_high": self.independence.high,
            "independence_threshold": self.independence.threshold,
            "incentive_slope_low": {
                "sign": "positive" if self.incentives.aligned
                else "negative" if self.incentives.anti_social
                else "zero" if slopes and all(s == 0 for s in slopes) else "mixed",
                "min": min(slopes) if slopes else None,
                "max": max(slopes) if slopes else None,
            },
            "limit_c": self.incentives.limit_c,
            "limit_status": self.incentives.limit_status,
            "stability_method": self.incentives.stability_method,
            "verdicts": self.verdicts,
            "impossibility_consistent": self.impossibility_consistent,
            "skipped": list(self.independence.skipped) + list(self.incentives.notes),
        }


def audit_scheme(scheme, pop: Population, params: CostParams, epsilon: float = DEFAULT_EPSILON) -> AuditReport:
    scheme = get_scheme(scheme)
    return AuditReport(
        scheme.name,
        audit_efficiency(scheme, pop, params),
        audit_independence(scheme, pop, params),
        audit_aligned_incentives(scheme, pop, params, epsilon=epsilon),
    )
