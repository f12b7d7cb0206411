# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: the two-type Shapley sum and the claim-count convolution."""

import numpy as np
cimport numpy as cnp
from libc.math cimport lgamma, exp, log, log1p, sqrt, NAN

cnp.import_array()


cdef double[::1] _log_factorials(Py_ssize_t n):
    cdef double[::1] lf = np.empty(n + 1)
    cdef Py_ssize_t k
    for k in range(n + 1):
        lf[k] = lgamma(k + 1.0)
    return lf


cdef inline double _lbinom(double[::1] lf, Py_ssize_t n, Py_ssize_t k) nogil:
    return lf[n] - lf[k] - lf[n - k]


cdef double _type_share(Py_ssize_t n_same, Py_ssize_t n_other, double r_same, double r_other,
                        double V, double buffer, double[::1] lf) nogil:
    cdef Py_ssize_t n = n_same + n_other
    cdef double R_same = r_same * (1.0 - r_same)
    cdef double R_other = r_other * (1.0 - r_other)
    cdef double log_n = log(<double>n)
    cdef double total = 0.0, comp = 0.0, t, term, s, denom, spread, la
    cdef Py_ssize_t a, b
    for a in range(n_same):
        la = _lbinom(lf, n_same - 1, a) - log_n
        for b in range(n_other + 1):
            s = a * R_same + b * R_other
            denom = sqrt(s + R_same) + sqrt(s)
            spread = R_same / denom if denom > 0 else 0.0
            term = exp(la + _lbinom(lf, n_other, b) - _lbinom(lf, n - 1, a + b)) \
                * V * (r_same + buffer * spread)
            # Neumaier compensated summation
            t = total + term
            if abs(total) >= abs(term):
                comp += (total - t) + term
            else:
                comp += (term - t) + total
            total = t
    return total + comp


def shapley_two_type(Py_ssize_t n_low, Py_ssize_t n_high, double r_low, double r_high,
                     double V, double buffer):
    cdef Py_ssize_t n = n_low + n_high
    cdef double[::1] lf = _log_factorials(n if n > 1 else 1)
    cdef double phi_low = NAN, phi_high = NAN
    with nogil:
        if n_low > 0:
            phi_low = _type_share(n_low, n_high, r_low, r_high, V, buffer, lf)
        if n_high > 0:
            phi_high = _type_share(n_high, n_low, r_high, r_low, V, buffer, lf)
    return phi_low, phi_high


cdef cnp.ndarray _binomial_pmf(Py_ssize_t n, double r, double[::1] lf):
    cdef cnp.ndarray out = np.zeros(n + 1)
    cdef double[::1] view = out
    cdef Py_ssize_t k
    cdef double lr, lq
    if r == 0.0 or n == 0:
        view[0] = 1.0
        return out
    lr = log(r)
    lq = log1p(-r)
    for k in range(n + 1):
        view[k] = exp(_lbinom(lf, n, k) + k * lr + (n - k) * lq)
    return out


def binomial_pmf(Py_ssize_t n, double r):
    return _binomial_pmf(n, r, _log_factorials(n if n > 1 else 1))


def claim_count_pmf(Py_ssize_t n_low, double r_low, Py_ssize_t n_high, double r_high):
    cdef Py_ssize_t m = max(n_low, n_high, 1)
    cdef double[::1] lf = _log_factorials(m)
    cdef double[::1] p = _binomial_pmf(n_low, r_low, lf)
    cdef double[::1] q = _binomial_pmf(n_high, r_high, lf)
    cdef cnp.ndarray out = np.zeros(n_low + n_high + 1)
    cdef double[::1] o = out
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(n_low + 1):
            if p[i] == 0.0:
                continue
            for j in range(n_high + 1):
                o[i + j] += p[i] * q[j]
    return out


cdef inline double _marginal(double s, double r, double R, double V, double buffer) nogil:
    cdef double denom = sqrt(s + R) + sqrt(s)
    return V * (r + buffer * (R / denom if denom > 0 else 0.0))


def shapley_grid(Py_ssize_t N_low, Py_ssize_t N_high, double r_low, double r_high,
                 double V, double buffer):
    cdef double R_low = r_low * (1.0 - r_low)
    cdef double R_high = r_high * (1.0 - r_high)
    cdef cnp.ndarray low_arr = np.full((N_low + 1, N_high + 1), np.nan)
    cdef cnp.ndarray high_arr = np.full((N_low + 1, N_high + 1), np.nan)
    cdef double[:, ::1] low = low_arr
    cdef double[:, ::1] high = high_arr
    cdef Py_ssize_t a, b
    cdef double acc, n
    with nogil:
        for a in range(N_low + 1):
            for b in range(N_high + 1):
                n = a + b
                if n == 0:
                    continue
                if a > 0:
                    acc = _marginal((a - 1) * R_low + b * R_high, r_low, R_low, V, buffer)
                    if a > 1:
                        acc += (a - 1) * low[a - 1, b]
                    if b > 0:
                        acc += b * low[a, b - 1]
                    low[a, b] = acc / n
                if b > 0:
                    acc = _marginal(a * R_low + (b - 1) * R_high, r_high, R_high, V, buffer)
                    if b > 1:
                        acc += (b - 1) * high[a, b - 1]
                    if a > 0:
                        acc += a * high[a - 1, b]
                    high[a, b] = acc / n
    return low_arr, high_arr
