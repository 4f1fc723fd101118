"""Time the numba kernels against the pure-numpy fallback.

Runs the three kernel stages (all-subsets regression tables, the
best-over-subsets lattice reduction, the sink DP) plus an end-to-end
exact fit at each problem size, once per backend, and prints the best
wall time over --repeat attempts. The numba path is warmed once per
size so JIT compilation is excluded.

Usage: python benchmarks/bench_kernels.py [--sizes 8,10,12] [--repeat 5]
"""

import argparse
import time

import numpy as np

from l0dag import CovarianceMatrix, build_score_table, fit_exact
from l0dag import _backend
from l0dag import _subsets


def sample_sigma(rng, p):
    X = rng.standard_normal((4 * p, p))
    return CovarianceMatrix(X.T @ X / (4 * p), kind="empirical", n=4 * p)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_size(p, repeat, seed):
    rng = np.random.default_rng(seed)
    sigma = sample_sigma(rng, p)
    pc = _subsets.popcounts(2 ** (p - 1))
    rk = _subsets.bit_reversal_keys(p - 1)
    scores = np.log1p(rng.random((p, 2 ** (p - 1)))) + 0.1 * pc

    rows = []
    for name in ("numpy", "numba"):
        try:
            kern = _backend.use_backend(name)
        except ImportError:
            print(f"p={p:<3d} {name:<6s} unavailable, skipped")
            continue
        # warm-up triggers compilation on the numba path
        kern.subset_tables(sigma.matrix, p - 1, 0.0, np.inf, True)
        best, _ = kern.best_over_subsets(scores, pc, rk)
        kern.sink_dp(best)

        t_tab = best_of(
            lambda: kern.subset_tables(sigma.matrix, p - 1, 0.0, np.inf, True),
            repeat,
        )
        t_red = best_of(lambda: kern.best_over_subsets(scores, pc, rk), repeat)
        t_dp = best_of(lambda: kern.sink_dp(best), repeat)
        t_fit = best_of(
            lambda: fit_exact(
                build_score_table(sigma, lambda2=0.1, max_parents=p - 1)
            ),
            repeat,
        )
        rows.append((name, t_tab, t_red, t_dp, t_fit))

    for name, t_tab, t_red, t_dp, t_fit in rows:
        print(
            f"p={p:<3d} {name:<6s} tables {t_tab * 1e3:9.3f} ms   "
            f"reduce {t_red * 1e3:8.3f} ms   dp {t_dp * 1e3:8.3f} ms   "
            f"fit_exact {t_fit * 1e3:9.3f} ms"
        )
    if len(rows) == 2:
        ratio = rows[0][1] / rows[1][1]
        print(f"p={p:<3d} numba speedup on tables: {ratio:.1f}x")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="8,10,12")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    for p in (int(tok) for tok in args.sizes.split(",")):
        bench_size(p, args.repeat, args.seed)
    _backend.use_backend("auto")


if __name__ == "__main__":
    main()
