#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy fallback.

The stump threshold scan dominates candidate synthesis (it runs once per
candidate per iteration per class) and the E-step dominates Dawid-Skene
aggregation, so these two are the compiled core. Run:

    python benchmarks/bench_kernels.py [--repeats 5]
"""

import argparse
import time

import numpy as np

from autoweak._kernels import _fallback

try:
    from autoweak._kernels import _fast
except ImportError:
    _fast = None


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_stump(repeats):
    rng = np.random.default_rng(0)
    rows = []
    for n, C in ((100, 2), (1000, 2), (10000, 4), (100000, 10)):
        x = rng.normal(size=n)
        y = rng.integers(0, C, size=n)

        def run_fallback():
            _fallback.stump_scan(x, y, C)

        t_py = best_of(run_fallback, repeats)
        t_c = None
        if _fast is not None:
            assert _fast.stump_scan(x, y, C) == _fallback.stump_scan(x, y, C)

            def run_fast():
                _fast.stump_scan(x, y, C)

            t_c = best_of(run_fast, repeats)
        rows.append((f"stump_scan n={n} C={C}", t_py, t_c))
    return rows


def bench_estep(repeats):
    rng = np.random.default_rng(1)
    rows = []
    for n, K, C in ((1000, 5, 2), (10000, 10, 4), (50000, 20, 10)):
        votes = rng.integers(-1, C, size=(n, K))
        prior = rng.dirichlet(np.ones(C))
        conf = rng.dirichlet(np.ones(C), size=(K, C))
        lp, lc = np.log(prior), np.log(conf)

        def run_fallback():
            _fallback.ds_estep(votes, lp, lc)

        t_py = best_of(run_fallback, repeats)
        t_c = None
        if _fast is not None:
            pa, _ = _fallback.ds_estep(votes, lp, lc)
            pb, _ = _fast.ds_estep(votes, lp, lc)
            assert np.allclose(pa, pb, atol=1e-12)

            def run_fast():
                _fast.ds_estep(votes, lp, lc)

            t_c = best_of(run_fast, repeats)
        rows.append((f"ds_estep n={n} K={K} C={C}", t_py, t_c))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if _fast is None:
        print("compiled kernels not built; timing the fallback only\n")

    print(f"{'kernel':<34} {'fallback':>12} {'compiled':>12} {'speedup':>9}")
    for name, t_py, t_c in bench_stump(args.repeats) + bench_estep(args.repeats):
        if t_c is None:
            print(f"{name:<34} {t_py * 1e3:>10.3f}ms {'-':>12} {'-':>9}")
        else:
            print(f"{name:<34} {t_py * 1e3:>10.3f}ms {t_c * 1e3:>10.3f}ms "
                  f"{t_py / t_c:>8.1f}x")


if __name__ == "__main__":
    main()
