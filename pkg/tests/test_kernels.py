import os
import subprocess
import sys

import numpy as np
import pytest
from scipy import stats

from riskpool import _pykernels, kernels

try:
    from riskpool import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = [pytest.param(_pykernels, id="python"),
            pytest.param(_ckernels, id="cython",
                         marks=pytest.mark.skipif(_ckernels is None, reason="extension not built"))]


@pytest.mark.parametrize("impl", BACKENDS)
@pytest.mark.parametrize("n,r", [(0, 0.1), (1, 0.3), (10, 0.0), (40, 0.02), (700, 0.04)])
def test_binomial_pmf(impl, n, r):
    got = impl.binomial_pmf(n, r)
    np.testing.assert_allclose(got, stats.binom.pmf(np.arange(n + 1), n, r), rtol=1e-10, atol=1e-300)


@pytest.mark.parametrize("impl", BACKENDS)
def test_claim_count_pmf_sums_to_one(impl):
    pmf = impl.claim_count_pmf(300, 0.02, 200, 0.04)
    assert pmf.shape == (501,)
    assert pmf.sum() == pytest.approx(1.0, abs=1e-12)
    mean = (np.arange(501) * pmf).sum()
    assert mean == pytest.approx(300 * 0.02 + 200 * 0.04, rel=1e-10)


@pytest.mark.skipif(_ckernels is None, reason="extension not built")
@pytest.mark.parametrize("comp", [(1, 0), (0, 3), (2, 2), (17, 40), (500, 500)])
def test_backends_agree_on_shapley(comp):
    args = (*comp, 0.02, 0.04, 1000.0, 2.0)
    c = np.array(_ckernels.shapley_two_type(*args))
    p = np.array(_pykernels.shapley_two_type(*args))
    np.testing.assert_allclose(c, p, rtol=1e-12, equal_nan=True)


@pytest.mark.skipif(_ckernels is None, reason="extension not built")
def test_backends_agree_on_grid():
    c = _ckernels.shapley_grid(30, 45, 0.02, 0.04, 1000.0, 2.0)
    p = _pykernels.shapley_grid(30, 45, 0.02, 0.04, 1000.0, 2.0)
    for x, y in zip(c, p):
        np.testing.assert_allclose(x, y, rtol=1e-12, equal_nan=True)


@pytest.mark.parametrize("impl", BACKENDS)
def test_grid_recursion_matches_composition_sum(impl):
    low, high = impl.shapley_grid(25, 25, 0.02, 0.025, 1000.0, 2.0)
    for a in range(26):
        for b in range(26):
            if a == b == 0:
                continue
            pl, ph = impl.shapley_two_type(a, b, 0.02, 0.025, 1000.0, 2.0)
            np.testing.assert_allclose([low[a, b], high[a, b]], [pl, ph], rtol=1e-11, equal_nan=True)


def test_fallback_selected_by_environment():
    env = dict(os.environ, RISKPOOL_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import riskpool; print(riskpool.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    assert kernels.BACKEND in ("python", "cython")
