#!/usr/bin/env python3
"""Benchmark the sliding-window pairwise-correlation kernel.

Compares the compiled (cython) backend against the pure-numpy fallback on
the desk-scale cell geometries, then measures process-level scaling of the
batch engine. Run from the repo root:

    python3 benchmarks/bench_kernel.py [--records 45] [--quick]
"""

from __future__ import annotations

import argparse
import time
from functools import partial

import numpy as np

from eegsync._backend import available_backends, kernel_by_name
from eegsync.corr import BatchCell, WindowSpec, dynamic_isc_batch
from eegsync.model import FeatureConfig, FeatureKind, FeatureSeries
from eegsync.stats import window_significance

# (label, series length, window pts, hop pts): the criterion-6 cell shapes
GEOMETRIES = [
    ("fd s=20, w=10s", 2399, 100, 10),
    ("fd s=20, w=70s", 2399, 700, 10),
    ("de s=200, w=10s", 240, 10, 1),
    ("de s=200, w=70s", 240, 70, 1),
]


def time_call(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_backends(records: int, repeats: int) -> None:
    rng = np.random.default_rng(0)
    backends = available_backends()
    print(f"kernel backends: {', '.join(backends)}   (M={records} records)")
    header = f"{'geometry':<18}{'windows':>8}" + "".join(
        f"{name + ' (ms)':>16}" for name in backends
    )
    print(header)
    print("-" * len(header))
    for label, length, width, hop in GEOMETRIES:
        v = rng.normal(size=(records, length))
        n_windows = (length - width) // hop + 1
        row = f"{label:<18}{n_windows:>8}"
        for name in backends:
            kernel = kernel_by_name(name)
            kernel.windowed_pair_corr(v, width, hop)  # warm up
            best = time_call(lambda: kernel.windowed_pair_corr(v, width, hop),
                             repeats)
            row += f"{best * 1e3:>16.1f}"
        print(row)


def bench_scaling(records: int, channels: int, workers: list[int]) -> None:
    rng = np.random.default_rng(1)
    cfg = FeatureConfig(FeatureKind.FIRST_DIFFERENCE, 20)
    cells = []
    for c in range(channels):
        series = tuple(
            FeatureSeries(cfg, f"s{i:02d}", "1", "f01", f"C{c:02d}", row, 200.0)
            for i, row in enumerate(rng.normal(size=(records, 2399)))
        )
        cells.append(BatchCell("f01", f"C{c:02d}", cfg.label, series))
    specs = [WindowSpec(10.0, 1.0), WindowSpec(70.0, 1.0)]
    finalize = partial(window_significance, alpha=0.05, drop_pairs=True)

    print(f"\nbatch engine scaling ({channels} channels x 2 specs, "
          f"{records} records):")
    base = None
    for n in workers:
        t0 = time.perf_counter()
        results, errors = dynamic_isc_batch(cells, specs, parallel=n,
                                            finalize=finalize)
        elapsed = time.perf_counter() - t0
        assert not errors
        n_windows = sum(d.n_windows for d in results)
        base = base or elapsed
        print(f"  parallel={n:<3d} {elapsed:6.2f}s  "
              f"{n_windows / elapsed:8.0f} windows/s  "
              f"speedup {base / elapsed:.2f}x")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--records", type=int, default=45)
    parser.add_argument("--channels", type=int, default=62)
    parser.add_argument("--workers", type=int, nargs="+", default=[1, 2, 4, 8])
    parser.add_argument("--quick", action="store_true",
                        help="smaller workload, fewer repeats")
    args = parser.parse_args()

    repeats = 2 if args.quick else 5
    channels = min(args.channels, 8) if args.quick else args.channels
    bench_backends(args.records, repeats)
    bench_scaling(args.records, channels, args.workers)


if __name__ == "__main__":
    main()
