#!/usr/bin/env python3
"""Benchmark the compiled Monte Carlo kernel against the NumPy fallback.

Runs the same replication block through both backends and reports draws per
second (one draw = one severity transform inside the bank-loss sum; the
burned common-factor draw is excluded from the count).

Usage: python benchmarks/bench_kernels.py [--reps 20000] [--cells 256]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from oprisklab import _kernels_py

try:
    from oprisklab import _kernels
except ImportError:
    _kernels = None


def bench(module, name: str, reps: int, cells: int, corr: float) -> float:
    losses = np.empty(reps)
    pair = np.empty(2)
    module.simulate_block(-3.0, 1.5, corr, 0, 2.0, 0.5, 42, 0, 64, cells, losses[:64], pair, False)
    start = time.perf_counter()
    module.simulate_block(-3.0, 1.5, corr, 0, 2.0, 0.5, 42, 0, reps, cells, losses, pair, False)
    elapsed = time.perf_counter() - start
    rate = reps * cells / elapsed
    print(f"{name:>10}: {elapsed:7.3f} s   {rate / 1e6:8.2f} M draws/s   (loss[0] = {losses[0]:.6f})")
    return rate


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--reps", type=int, default=20000)
    parser.add_argument("--cells", type=int, default=256)
    parser.add_argument("--corr", type=float, default=0.0)
    args = parser.parse_args()
    print(f"reps={args.reps} cells={args.cells} corr={args.corr}")
    py_rate = bench(_kernels_py, "python", args.reps, args.cells, args.corr)
    if _kernels is None:
        print("  compiled: extension not built (pip install -e . --no-build-isolation)")
        return
    c_rate = bench(_kernels, "compiled", args.reps, args.cells, args.corr)
    print(f"{'speedup':>10}: {c_rate / py_rate:7.1f} x")


if __name__ == "__main__":
    main()
