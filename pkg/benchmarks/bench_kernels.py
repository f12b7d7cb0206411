"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from riskpool import _pykernels

try:
    from riskpool import _ckernels
except ImportError:
    _ckernels = None

CASES = {
    "shapley_two_type(500, 500)": lambda k: k.shapley_two_type(500, 500, 0.02, 0.04, 1000.0, 2.0),
    "shapley_two_type(2000, 2000)": lambda k: k.shapley_two_type(2000, 2000, 0.02, 0.04, 1000.0, 2.0),
    "shapley_grid(500, 500)": lambda k: k.shapley_grid(500, 500, 0.02, 0.04, 1000.0, 2.0),
    "claim_count_pmf(2500, 2500)": lambda k: k.claim_count_pmf(2500, 0.02, 2500, 0.04),
}


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if _ckernels is None:
        print("compiled extension not built; only the numpy backend is timed")

    print(f"{'kernel':<30} {'numpy (ms)':>12} {'cython (ms)':>12} {'speed-up':>9}")
    for name, call in CASES.items():
        py = best_of(lambda: call(_pykernels), args.repeat)
        if _ckernels is None:
            print(f"{name:<30} {py * 1e3:12.2f} {'-':>12} {'-':>9}")
            continue
        cy = best_of(lambda: call(_ckernels), args.repeat)
        a, b = np.asarray(call(_pykernels)), np.asarray(call(_ckernels))
        assert np.allclose(a, b, rtol=1e-10, equal_nan=True), name
        print(f"{name:<30} {py * 1e3:12.2f} {cy * 1e3:12.2f} {py / cy:8.1f}x")


if __name__ == "__main__":
    main()
