#!/usr/bin/env python3
"""Benchmark the split-scan kernels (compiled vs numpy fallback).

Times the per-node best-split search over realistic training shapes and a
full boosted-ensemble fit on each backend, and verifies the outputs stay
bit-identical while timing.

Usage: python benchmarks/bench_split.py [--rows 4800] [--features 80] [--rounds 50]
"""

import argparse
import time

import numpy as np

from metainf import _kernels
from metainf.gbm import GbmHyperparams, train_gbm


def bench_scan(rows: int, features: int, repeats: int) -> None:
    rng = np.random.default_rng(0)
    X = np.ascontiguousarray(rng.standard_normal((rows, features)))
    target = rng.standard_normal(rows)
    sort_idx = np.empty((features, rows), dtype=np.int32)
    for j in range(features):
        sort_idx[j] = np.argsort(X[:, j], kind="stable")
    backends = _kernels.available_backends()

    print(f"split scan: {rows} rows x {features} features, {repeats} node sizes")
    header = f"{'node fill':>10}" + "".join(f"{name:>14}" for name in backends)
    print(header)
    for fill in (1.0, 0.5, 0.25, 0.1):
        in_node = (rng.random(rows) < fill).astype(np.uint8)
        in_node[: max(4, int(rows * 0.01))] = 1
        times = {}
        results = {}
        for name, fn in backends.items():
            t0 = time.perf_counter()
            for _ in range(repeats):
                results[name] = fn(X, target, sort_idx, in_node, 5)
            times[name] = (time.perf_counter() - t0) / repeats
        row = f"{fill:>10.2f}" + "".join(f"{times[name] * 1e3:>12.2f}ms" for name in backends)
        if len(results) == 2:
            a, b = results.values()
            row += "   identical" if a == b else "   MISMATCH!"
        print(row)


def bench_train(rows: int, features: int, rounds: int) -> None:
    rng = np.random.default_rng(1)
    X = rng.standard_normal((rows, features))
    y = np.exp(rng.standard_normal(rows) * 0.3 + 2.0)
    hp = GbmHyperparams(n_rounds=rounds)
    print(f"\nboosted fit: {rows} rows x {features} features, {rounds} rounds")
    models = {}
    for name in _kernels.available_backends():
        with _kernels.use_backend(name):
            t0 = time.perf_counter()
            models[name] = train_gbm(X, y, hp)
            print(f"{name:>10}: {time.perf_counter() - t0:.2f}s")
    if len(models) == 2:
        a, b = models.values()
        same = a.to_dict() == b.to_dict()
        print("models identical:" , same)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rows", type=int, default=4800)
    parser.add_argument("--features", type=int, default=80)
    parser.add_argument("--rounds", type=int, default=50)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()
    print(f"active backend: {_kernels.BACKEND}")
    bench_scan(args.rows, args.features, args.repeats)
    bench_train(args.rows, args.features, args.rounds)


if __name__ == "__main__":
    main()
