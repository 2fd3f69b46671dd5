"""Compiled vs pure-Python kernels on the same seeded workloads.

    python3 benchmarks/bench_kernels.py [--n 200] [--seed 0] [--repeat 3]

Prints one CSV row per (workload, backend) with the best wall time over
``--repeat`` runs and the speedup of the compiled kernels.
"""
from __future__ import annotations

import argparse
import csv
import sys
import time

import numpy as np

from csach import kernels
from csach.graph import gen_random_graph
from csach.hierarchy import build_ch
from csach.query import bidir_dijkstra_distances, csa_ch_distances, csa_ch_many_to_many
from csach.timetable import csa_earliest_arrival, gen_random_timetable


def workloads(n: int, seed: int):
    g = gen_random_graph(n, 5 * n, seed)
    ch = build_ch(g, "edge-difference")
    src, dst = np.divmod(np.arange(n * n), n)
    m2m = list(range(0, n, max(1, n // 10)))
    tt = gen_random_timetable(50, 2000, seed)
    return {
        "build-edge-difference": lambda be: build_ch(g, "edge-difference", backend=be),
        "csa-ch-all-pairs": lambda be: csa_ch_distances(ch, src, dst, backend=be),
        "bidir-dijkstra-ch-all-pairs": lambda be: bidir_dijkstra_distances(ch, src, dst, backend=be),
        "csa-ch-m2m-10x10": lambda be: csa_ch_many_to_many(ch, m2m, m2m, backend=be),
        "timetable-csa-x50": lambda be: [csa_earliest_arrival(tt, {s: 0}, [], backend=be) for s in range(50)],
    }


def best_time(fn, backend: str, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(backend)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    backends = ["python"] + (["cython"] if kernels.compiled_available() else [])
    if len(backends) == 1:
        print("compiled kernels not built; timing the Python fallback only", file=sys.stderr)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(("workload", "backend", "seconds", "speedup"))
    for name, fn in workloads(args.n, args.seed).items():
        times = {be: best_time(fn, be, args.repeat) for be in backends}
        for be in backends:
            w.writerow((name, be, f"{times[be]:.6f}", f"{times['python'] / times[be]:.1f}"))
    return 0


if __name__ == "__main__":
    sys.exit(main())
