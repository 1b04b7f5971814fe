#!/usr/bin/env python3
"""Time the numba kernels against their pure-numpy fallbacks.

Runs each hot kernel on representative problem sizes with both backends and
prints a table of per-call times and speedups. The first numba call per
kernel compiles (or loads the on-disk cache); compilation time is excluded
by warming up before timing.

Usage:
    python benchmarks/bench_kernels.py [--repeats 5]
"""

import argparse
import time

import numpy as np

from mbp import _kernels
from mbp.link import sigmoid_link
from mbp.simulate import random_sparse_theta, simulate
from mbp.tensor import stack_tensor

if not _kernels.HAVE_NUMBA:
    raise SystemExit("numba is not importable; nothing to compare")


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def bench_chain(repeats):
    cases = [("chain 5000 steps, N=20 p=20", 20, 20, 5000),
             ("chain 200000 steps, N=2 p=1", 2, 1, 200_000)]
    rows = []
    for label, n_dims, p, steps in cases:
        theta = random_sparse_theta(n_dims, p, max(1, n_dims * p // 8), seed=0)
        stacked = stack_tensor(theta)
        rng = np.random.default_rng(0)
        init = (rng.random((p, n_dims)) < 0.5).astype(np.float64)
        uniforms = rng.random((steps, n_dims))
        args = (init, stacked, 1.0, 0.05, uniforms)
        _kernels._chain_steps_numba(*args)  # warm up / compile
        t_numba = best_of(lambda: _kernels._chain_steps_numba(*args), repeats)
        t_numpy = best_of(lambda: _kernels._chain_steps_numpy(*args), repeats)
        rows.append((label, t_numba, t_numpy))
    return rows


def bench_loss(repeats):
    rng = np.random.default_rng(1)
    cases = [("loss+residual n=4490, N=20", 4490, 20),
             ("loss+residual n=6000, N=100", 6000, 100)]
    rows = []
    for label, n, n_dims in cases:
        pred = rng.standard_normal((n, n_dims)) * 2.0
        targets = (rng.random((n, n_dims)) < 0.5).astype(np.float64)
        args = (pred, targets, 1.0, 0.05, True)
        _kernels._bernoulli_loss_terms_numba(*args)
        t_numba = best_of(lambda: _kernels._bernoulli_loss_terms_numba(*args), repeats)
        t_numpy = best_of(lambda: _kernels._bernoulli_loss_terms_numpy(*args), repeats)
        rows.append((label, t_numba, t_numpy))
    return rows


def bench_quad(repeats):
    link = sigmoid_link(1.0, 0.05)
    rng = np.random.default_rng(2)
    cases = [("lagged squares n=2000, N=2 p=1", 2, 1, 2000),
             ("lagged squares n=500, N=5 p=2", 5, 2, 500)]
    rows = []
    for label, n_dims, p, n in cases:
        theta = random_sparse_theta(n_dims, p, n_dims, seed=3)
        path = simulate(theta, link, n, seed=3)
        data = path.data.astype(np.float64)
        delta = rng.standard_normal((n_dims, n_dims, p))
        _kernels._lagged_square_sum_numba(data, delta)
        t_numba = best_of(lambda: _kernels._lagged_square_sum_numba(data, delta), repeats)
        t_numpy = best_of(lambda: _kernels._lagged_square_sum_numpy(data, delta), repeats)
        rows.append((label, t_numba, t_numpy))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rows = []
    rows += bench_chain(args.repeats)
    rows += bench_loss(args.repeats)
    rows += bench_quad(args.repeats)

    width = max(len(r[0]) for r in rows)
    print(f"{'kernel':<{width}}  {'numba':>10}  {'numpy':>10}  {'speedup':>8}")
    for label, t_numba, t_numpy in rows:
        print(
            f"{label:<{width}}  {t_numba * 1e3:>8.2f}ms  {t_numpy * 1e3:>8.2f}ms  "
            f"{t_numpy / t_numba:>7.1f}x"
        )


if __name__ == "__main__":
    main()
