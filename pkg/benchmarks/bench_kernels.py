"""Compare the numba and numpy paths of the hot kernels.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Each kernel is run once per path to warm up (JIT compile for numba), then timed
as the best of ``--repeat`` runs. Results from both paths are checked for
agreement before timing is reported.
"""

import argparse
import time

import numpy as np

from covertroute import kernels


def best_of(fn, repeat):
    fn()
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def gamma_case(rng):
    s = rng.uniform(1.0, 2000.0, 20_000)
    x = s * rng.uniform(0.5, 1.5, s.size)
    return "gamma_pq (20k pairs)", lambda nb: kernels.gamma_pq(s, x, use_numba=nb)


def obstruction_case(rng):
    p1 = rng.uniform(0, 250, (5_000, 3))
    p2 = rng.uniform(0, 250, (5_000, 3))
    lo = rng.uniform(0, 230, (40, 3))
    hi = lo + rng.uniform(5, 20, (40, 3))
    return "obstruction_counts (5k x 40)", lambda nb: kernels.obstruction_counts(p1, p2, lo, hi, use_numba=nb)


def energy_case(rng):
    re = rng.standard_normal((20_000, 100))
    im = rng.standard_normal((20_000, 100))
    return "count_energy_above (20k x 100)", lambda nb: kernels.count_energy_above(re, im, 200.0, use_numba=nb)


def routes_case(rng):
    # random CSR multigraph: 11 nodes, each pair linked with probability 0.45 on 1-3 modalities
    n = 11
    dst, dep, indptr = [], [], [0]
    for u in range(n):
        for v in range(n):
            if u != v and rng.random() < 0.45:
                for _ in range(int(rng.integers(1, 4))):
                    dst.append(v)
                    dep.append(rng.uniform(0.5, 1.0))
        indptr.append(len(dst))
    dep = np.array(dep)
    args = (n, np.array(indptr), np.array(dst), -np.log(dep), dep, 0, n - 1)
    return "enumerate_routes (11 nodes, %d edges)" % len(dst), lambda nb: kernels.enumerate_routes(*args, use_numba=nb)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    rng = np.random.default_rng(0)
    cases = [gamma_case(rng), obstruction_case(rng), energy_case(rng), routes_case(rng)]
    print(f"{'kernel':40s} {'numba ms':>10s} {'numpy ms':>10s} {'speedup':>8s}")
    for name, fn in cases:
        a, b = fn(True), fn(False)
        for u, v in zip(a if isinstance(a, tuple) else (a,), b if isinstance(b, tuple) else (b,)):
            np.testing.assert_allclose(np.asarray(u), np.asarray(v), rtol=1e-12, atol=1e-15)
        t_nb = best_of(lambda: fn(True), args.repeat)
        t_np = best_of(lambda: fn(False), args.repeat)
        print(f"{name:40s} {1e3 * t_nb:10.2f} {1e3 * t_np:10.2f} {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
