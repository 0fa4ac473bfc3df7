"""Time the compiled kernels against the pure-Python ones on the same inputs.

Usage: python benchmarks/bench_kernels.py [--rows 200000] [--repeat 5]
"""

from __future__ import annotations

import argparse
import operator
import random
import timeit

from joinagg import _kernels_py

try:
    from joinagg import _ckernels
except ImportError:
    _ckernels = None


def workload(rows: int, seed: int = 0):
    rng = random.Random(seed)
    keys = max(1, rows // 20)
    left = {(rng.randrange(keys), i): 1 for i in range(rows)}
    right = {(rng.randrange(keys), -i): 2 for i in range(rows // 10)}
    return left, right


def cases(kernels, left, right):
    keys = kernels.key_set(right, (0,))
    return {
        "hash_join": lambda: kernels.hash_join(left, right, (0,), (0,), (1,), operator.mul, 10**12, False),
        "key_set": lambda: kernels.key_set(left, (0,)),
        "filter_in": lambda: kernels.filter_in(left, (0,), keys),
        "filter_out": lambda: kernels.filter_out(left, (0,), keys),
        "aggregate": lambda: kernels.aggregate(left, (0,), operator.add),
        "project_one": lambda: kernels.project_one(left, (0,), 1),
        "group_count": lambda: kernels.group_count(left, (0,)),
    }


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--rows", type=int, default=200_000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    left, right = workload(args.rows)
    backends = [("python", _kernels_py)] + ([("cython", _ckernels)] if _ckernels else [])
    timings = {}
    for name, kernels in backends:
        for kernel, fn in cases(kernels, left, right).items():
            timings[name, kernel] = min(timeit.repeat(fn, number=1, repeat=args.repeat))
    print(f"{'kernel':<12} {'python ms':>10} {'cython ms':>10} {'speedup':>8}")
    for kernel in cases(_kernels_py, left, right):
        py = timings["python", kernel] * 1000
        if _ckernels:
            cy = timings["cython", kernel] * 1000
            print(f"{kernel:<12} {py:>10.1f} {cy:>10.1f} {py / cy:>7.2f}x")
        else:
            print(f"{kernel:<12} {py:>10.1f} {'n/a':>10} {'':>8}")


if __name__ == "__main__":
    main()
