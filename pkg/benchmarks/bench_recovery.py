#!/usr/bin/env python3
"""Benchmark the recovery kernel backends against each other.

Runs the same seeded problem batch through the compiled extension and the
numpy fallback and prints per-case timings.  The interesting regime is the
protocol's own: many tiny problems, where interpreter overhead dominates the
fallback.

Usage: python benchmarks/bench_recovery.py [--repeats 5]
"""

import argparse
import time

import numpy as np

from hdacs import cs
from hdacs.kernels import available_backends

# (signal length, measurements, sparsity, problems per batch)
CASES = [
    (4, 2, 1, 400),      # bottom-level cluster of an exact-power tree
    (16, 4, 1, 200),     # mid-level cluster
    (64, 6, 1, 100),     # upper-level cluster
    (256, 10, 1, 50),    # top-level decode
    (256, 120, 5, 20),   # generic sparse recovery, comfortable budget
    (1024, 40, 4, 10),   # large unstructured problem
]


def batch(n, m, k, count):
    problems = []
    for i in range(count):
        rng = np.random.default_rng((n, m, i))
        x = np.zeros(n)
        x[rng.choice(n, size=k, replace=False)] = rng.standard_normal(k) + 1.0
        phi = np.ascontiguousarray(cs.generate_matrix((n, i), m, n))
        problems.append((phi, phi @ x))
    return problems


def run(fn, problems, k, repeats):
    m, n = problems[0][0].shape
    rcond = float(np.finfo(float).eps * max(m, n))
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for phi, y in problems:
            fn(phi, y, k, n, 0, 50, 1e-6, rcond)
        best = min(best, time.perf_counter() - t0)
    return best / len(problems)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    impls = available_backends()
    names = sorted(impls)
    header = f"{'case (n, m, k)':>20} " + " ".join(f"{name:>12}" for name in names)
    if len(names) == 2:
        header += f" {'speedup':>9}"
    print(header)
    for n, m, k, count in CASES:
        problems = batch(n, m, k, count)
        per = {name: run(impls[name], problems, k, args.repeats) for name in names}
        row = f"{f'({n}, {m}, {k})':>20} " + " ".join(
            f"{per[name] * 1e6:>10.1f}us" for name in names
        )
        if len(names) == 2:
            row += f" {per['python'] / per['cython']:>8.1f}x"
        print(row)


if __name__ == "__main__":
    main()
