#!/usr/bin/env python3
"""Benchmark the compiled vs pure-Python rolling-statistics kernels.

Usage: python3 benchmarks/bench_rolling.py [--candles N] [--repeat R]
"""

import argparse
import time

import numpy as np

from pumpscan._kernels import rolling_py

try:
    from pumpscan._kernels import _rolling_cy
except ImportError:
    _rolling_cy = None


def make_inputs(n, seed=0):
    rng = np.random.default_rng(seed)
    vol = rng.lognormal(1, 1.5, n)
    vol[rng.random(n) < 0.2] = 0.0
    opn = rng.lognormal(0, 0.3, n)
    syn = np.zeros(n, dtype=np.uint8)
    return opn, vol, syn


def bench(fn, args, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--candles", type=int, default=500_000)
    parser.add_argument("--repeat", type=int, default=3)
    opts = parser.parse_args()

    opn, vol, syn = make_inputs(opts.candles)
    args = (opn, vol, syn, 7, 12, 30, 10)

    t_py = bench(rolling_py.rolling_contexts, args, opts.repeat)
    print(f"pure python : {t_py:8.3f}s  "
          f"({opts.candles / t_py / 1e6:6.2f} M candles/s)")

    if _rolling_cy is None:
        print("cython      : extension not built")
        return
    t_cy = bench(_rolling_cy.rolling_contexts, args, opts.repeat)
    print(f"cython      : {t_cy:8.3f}s  "
          f"({opts.candles / t_cy / 1e6:6.2f} M candles/s)")
    print(f"speedup     : {t_py / t_cy:8.1f}x")

    py_out = rolling_py.rolling_contexts(*args)
    cy_out = _rolling_cy.rolling_contexts(*args)
    agree = all(np.allclose(a, b, rtol=1e-12, atol=0)
                for a, b in zip(py_out, cy_out))
    print(f"outputs agree: {agree}")


if __name__ == "__main__":
    main()
