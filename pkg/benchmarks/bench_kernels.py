"""Compiled vs pure-Python kernel timings.

    python benchmarks/bench_kernels.py [--repeat N] [--out results.csv]

Shapes follow the experiment workload: week-long (168-point) DTW
profiles with a 24-step band, and a 32-cell LSTM layer over a 24-hour
look-back for a 32-window batch. Both backends are checked for
agreement before timing.
"""
from __future__ import annotations

import argparse
import csv
import sys
import timeit

import numpy as np

from fedstlf import kernels


def workloads(rng):
    a, b = rng.random(168), rng.random(168)
    cells, batch, steps = 32, 32, 24
    xw = rng.normal(size=(batch, steps, 4 * cells))
    u = rng.normal(0, 0.2, size=(cells, 4 * cells))
    gates, cs, tcs, hs = kernels.backend_module("python").lstm_forward(xw, u)
    dh = rng.normal(size=hs.shape)
    return {
        "dtw_distance[168,band24]": lambda m: m.dtw_distance(a, b, 24),
        "dtw_distance[168,full]": lambda m: m.dtw_distance(a, b, -1),
        "dtw_path[168,band24]": lambda m: m.dtw_path(a, b, 24),
        "lstm_forward[32x24x32]": lambda m: m.lstm_forward(xw, u),
        "lstm_backward[32x24x32]": lambda m: m.lstm_backward(dh, gates, cs, tcs, u),
    }


def _same(x, y) -> bool:
    if isinstance(x, tuple):
        return all(_same(p, q) for p, q in zip(x, y))
    return bool(np.allclose(x, y, rtol=0, atol=1e-10))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--out", help="also write the table as CSV")
    args = ap.parse_args(argv)
    if not kernels.compiled_available():
        print("compiled extension not built; only the Python backend is available", file=sys.stderr)
        return 1
    py, comp = kernels.backend_module("python"), kernels.backend_module("compiled")
    rows = []
    for name, fn in workloads(np.random.default_rng(0)).items():
        if not _same(fn(py), fn(comp)):
            print(f"{name}: backends disagree", file=sys.stderr)
            return 1
        per = {}
        for label, mod in (("python", py), ("compiled", comp)):
            n = 1
            while timeit.timeit(lambda: fn(mod), number=n) < 0.2:
                n *= 2
            per[label] = min(timeit.repeat(lambda: fn(mod), number=n, repeat=args.repeat)) / n
        rows.append((name, per["python"], per["compiled"], per["python"] / per["compiled"]))

    print(f"{'kernel':28s} {'python (ms)':>12s} {'compiled (ms)':>14s} {'speedup':>9s}")
    for name, p, c, s in rows:
        print(f"{name:28s} {1e3 * p:12.3f} {1e3 * c:14.4f} {s:8.1f}x")
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["kernel", "python_seconds", "compiled_seconds", "speedup"])
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
