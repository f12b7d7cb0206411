"""Kernel backend selection.

The compiled extension is preferred; the numpy implementation is used when it
is missing or when the environment variable ``RISKPOOL_PURE_PYTHON`` is set to
a non-empty value other than ``0``.
"""

from __future__ import annotations

import os

from . import _pykernels

_force_python = os.environ.get("RISKPOOL_PURE_PYTHON", "") not in ("", "0")

try:
    if _force_python:
        raise ImportError("pure-Python kernels requested")
    from . import _ckernels as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"

shapley_two_type = _impl.shapley_two_type
claim_count_pmf = _impl.claim_count_pmf
binomial_pmf = _impl.binomial_pmf
shapley_grid = _impl.shapley_grid

__all__ = ["BACKEND", "shapley_two_type", "claim_count_pmf", "binomial_pmf", "shapley_grid"]
