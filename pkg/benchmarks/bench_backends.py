"""Time the compiled hot loops against the pure-Python fallback.

Runs the same workloads through forge._speed and forge._pure with identical
seeds (results are draw-for-draw equal; see tests/test_backends.py) and
reports wall time and speedup.

Usage: python benchmarks/bench_backends.py [--repeat N]
"""

import argparse
import time

import numpy as np

from forge import _pure
from forge.peeling import qneg_cdf_table

try:
    from forge import _speed
except ImportError:
    _speed = None


def bench(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def workloads():
    table = qneg_cdf_table()

    def peel(mod):
        gens = [np.random.default_rng(s)
                for s in np.random.SeedSequence(0).spawn(200)]
        mod.peel_run_many(gens, 256, 1, 10 ** 6, table)

    def qinf(mod):
        gen = np.random.default_rng(1)
        for _ in range(50):
            mod.qinf_visits(gen, 1, 30, 2000, table)

    def tree_stats(mod):
        gen = np.random.default_rng(2)
        for _ in range(40):
            mod.snake_tree_stats(gen, 2 ** 15, 0.7, 0.01, 0.0, 0.3, 0.2, 0.1)

    def tree_arrays(mod):
        gen = np.random.default_rng(3)
        for _ in range(20):
            mod.snake_tree_arrays(gen, 2 ** 15, 0.5, 0.01, 0.005)

    return [("peel_run_many (200 chains, L=256)", peel),
            ("qinf_visits (50 walks)", qinf),
            ("snake_tree_stats (40 trees, 32k steps)", tree_stats),
            ("snake_tree_arrays (20 trees, 32k steps)", tree_arrays)]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3,
                    help="timing repetitions; best of N is reported")
    args = ap.parse_args()

    if _speed is None:
        print("compiled backend not built; only timing forge._pure")
    print(f"{'workload':<42}{'pure [s]':>10}{'speed [s]':>11}{'ratio':>8}")
    for name, work in workloads():
        t_pure = bench(lambda: work(_pure), args.repeat)
        if _speed is not None:
            t_fast = bench(lambda: work(_speed), args.repeat)
            print(f"{name:<42}{t_pure:>10.3f}{t_fast:>11.3f}"
                  f"{t_pure / t_fast:>7.1f}x")
        else:
            print(f"{name:<42}{t_pure:>10.3f}{'-':>11}{'-':>8}")


if __name__ == "__main__":
    main()
