"""Insolvency probability <-> safety multiplier, and the exact binomial quantile.

``bp_from_p`` uses Acklam's rational approximation to the inverse normal CDF
(relative error below 1.2e-9) followed by one Halley step against ``erfc``,
which brings it to double precision.
"""

from __future__ import annotations

import math

import numpy as np

from . import kernels
from .errors import CapabilityError, DomainError
from .model import CostParams, Population

EXACT_MAX_MEMBERS = 5_000

_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _norm_ppf_lower(p: float) -> float:
    """Inverse standard normal CDF for 0 < p <= 0.5."""
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        x = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
            (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        )
    else:
        q = p - 0.5
        r = q * q
        x = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / (
            ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        )
    e = 0.5 * math.erfc(-x / math.sqrt(2.0)) - p
    u = e * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def p_from_bp(b_p: float) -> float:
    """Upper-tail probability ``P(Z > b_p)`` of a standard normal."""
    if not math.isfinite(b_p):
        raise DomainError(f"b_p must be finite, got {b_p!r}")
    return 0.5 * math.erfc(b_p / math.sqrt(2.0))


def bp_from_p(p: float) -> float:
    """Safety multiplier whose upper-tail normal probability is ``p``.

    ``p = 0.5`` would give ``b_p = 0`` (the median), but is rejected: a
    zero buffer is the expected-value model, not an insolvency target.
    """
    if not (0.0 < p < 0.5):
        raise DomainError(f"insolvency probability must satisfy 0 < p < 0.5, got {p!r}")
    return -_norm_ppf_lower(p)


def exact_insolvency_quantile(comp, pop: Population, params: CostParams, p: float) -> float:
    """Smallest premium ``C`` with ``P(V * K > C) <= p`` for the exact claim count ``K``.

    ``K`` is the sum of two independent binomials, obtained by convolving
    their mass functions. Only the insured value ``V`` of ``params`` is used.
    """
    n_low, n_high = pop.validate(comp)
    if not (0.0 < p < 0.5):
        raise DomainError(f"insolvency probability must satisfy 0 < p < 0.5, got {p!r}")
    if n_low + n_high > EXACT_MAX_MEMBERS:
        raise CapabilityError(
            f"exact quantile is limited to {EXACT_MAX_MEMBERS} members, got {n_low + n_high}"
        )
    pmf = kernels.claim_count_pmf(n_low, pop.low.r, n_high, pop.high.r)
    # exceed[k] = P(K > k), summed from the tail so small masses are not swamped
    exceed = np.concatenate([np.cumsum(pmf[::-1])[::-1][1:], [0.0]])
    k = int(np.argmax(exceed <= p))
    return params.V * k
