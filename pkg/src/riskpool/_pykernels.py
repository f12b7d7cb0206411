"""Pure-Python (numpy) implementations of the hot kernels.

These mirror ``_ckernels.pyx`` one for one and are used whenever the compiled
extension is unavailable or ``RISKPOOL_PURE_PYTHON`` is set.
"""

from __future__ import annotations

import math

import numpy as np

# rows of the (a, b) predecessor grid evaluated per numpy call
_CHUNK_CELLS = 1 << 20


def log_factorials(n: int) -> np.ndarray:
    return np.array([math.lgamma(k + 1.0) for k in range(n + 1)])


def _log_binom(lf, n, k):
    return lf[n] - lf[k] - lf[n - k]


def _type_share(n_same, n_other, r_same, r_other, V, buffer, lf):
    """Shapley value of one member of the ``same`` type.

    Sums over (a, b) = (same-type, other-type) predecessors with hypergeometric
    arrival weights ``C(n_same-1, a) C(n_other, b) / C(n-1, a+b) / n``.
    """
    n = n_same + n_other
    R_same = r_same * (1.0 - r_same)
    R_other = r_other * (1.0 - r_other)
    b = np.arange(n_other + 1)
    lb = _log_binom(lf, n_other, b)
    rows = max(1, _CHUNK_CELLS // (n_other + 1))
    partial = []
    for start in range(0, n_same, rows):
        a = np.arange(start, min(start + rows, n_same))[:, None]
        logw = (
            _log_binom(lf, n_same - 1, a)
            + lb[None, :]
            - _log_binom(lf, n - 1, a + b[None, :])
            - math.log(n)
        )
        s = a * R_same + b[None, :] * R_other
        denom = np.sqrt(s + R_same) + np.sqrt(s)
        with np.errstate(invalid="ignore", divide="ignore"):
            spread = np.where(denom > 0, R_same / denom, 0.0)
        marginal = V * (r_same + buffer * spread)
        partial.append(float(np.sum(np.exp(logw) * marginal)))
    return math.fsum(partial)


def shapley_two_type(n_low, n_high, r_low, r_high, V, buffer):
    """Exact per-type Shapley cost shares; NaN for a type with no members."""
    n = n_low + n_high
    lf = log_factorials(max(n, 1))
    phi_low = (
        _type_share(n_low, n_high, r_low, r_high, V, buffer, lf) if n_low else math.nan
    )
    phi_high = (
        _type_share(n_high, n_low, r_high, r_low, V, buffer, lf) if n_high else math.nan
    )
    return phi_low, phi_high


def binomial_pmf(n: int, r: float, lf=None) -> np.ndarray:
    """Binomial(n, r) mass function evaluated in log space."""
    if r == 0.0 or n == 0:
        out = np.zeros(n + 1)
        out[0] = 1.0
        return out
    if lf is None:
        lf = log_factorials(n)
    k = np.arange(n + 1)
    logp = _log_binom(lf, n, k) + k * math.log(r) + (n - k) * math.log1p(-r)
    return np.exp(logp)


def claim_count_pmf(n_low, r_low, n_high, r_high) -> np.ndarray:
    """Mass function of Binomial(n_low, r_low) + Binomial(n_high, r_high)."""
    lf = log_factorials(max(n_low, n_high, 1))
    return np.convolve(binomial_pmf(n_low, r_low, lf), binomial_pmf(n_high, r_high, lf))


def shapley_grid(N_low, N_high, r_low, r_high, V, buffer):
    """Shapley shares for every sub-composition by the last-arrival recursion.

    ``phi_low(a, b) = [c(a, b) - c(a-1, b) + (a-1) phi_low(a-1, b) + b phi_low(a, b-1)] / (a + b)``
    and symmetrically for high-risk members. Cells on one anti-diagonal
    ``a + b = k`` only depend on the previous one, so each diagonal is a
    single vectorised update.
    """
    R_low = r_low * (1.0 - r_low)
    R_high = r_high * (1.0 - r_high)
    low = np.full((N_low + 1, N_high + 1), np.nan)
    high = np.full((N_low + 1, N_high + 1), np.nan)

    def marginal(a, b, r, R):
        # cost of adding one member of risk r to a pool of (a, b) members
        s = a * R_low + b * R_high
        denom = np.sqrt(s + R) + np.sqrt(s)
        with np.errstate(invalid="ignore", divide="ignore"):
            spread = np.where(denom > 0, R / denom, 0.0)
        return V * (r + buffer * spread)

    for k in range(1, N_low + N_high + 1):
        a = np.arange(max(0, k - N_high), min(k, N_low) + 1)
        b = k - a
        la = a[a > 0]
        lb = k - la
        prev_a = np.nan_to_num(low[la - 1, lb])
        prev_b = np.where(lb > 0, np.nan_to_num(low[la, np.maximum(lb - 1, 0)]), 0.0)
        low[la, lb] = (marginal(la - 1, lb, r_low, R_low) + (la - 1) * prev_a + lb * prev_b) / k
        hb = b[b > 0]
        ha = k - hb
        prev_b = np.nan_to_num(high[ha, hb - 1])
        prev_a = np.where(ha > 0, np.nan_to_num(high[np.maximum(ha - 1, 0), hb]), 0.0)
        high[ha, hb] = (marginal(ha, hb - 1, r_high, R_high) + (hb - 1) * prev_b + ha * prev_a) / k
    return low, high
