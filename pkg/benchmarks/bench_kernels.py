#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Runs betweenness, all-pairs BFS stats, and a full divisive trace on planted
fixtures of increasing size, in separate subprocesses so each backend is
selected by the CALLNET_ACCEL environment flag exactly as in production.

    python3 benchmarks/bench_kernels.py --sizes 50,100,200 --repeats 3
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

WORKER = """
import json, sys, time
from callnet import _accel
from callnet.community import StopRule, girvan_newman
from callnet.graph import EdgeData, InteractionGraph
from callnet.metrics import betweenness_nodes, closeness
from callnet.synth import planted_structure

sizes = json.loads(sys.argv[1])
repeats = int(sys.argv[2])
_accel.warmup()  # exclude JIT compile from timings

rows = []
for n in sizes:
    clans = max(2, n // 10)
    spec = planted_structure(clans, 10, bridges=clans, seed=1)
    edges = {}
    nodes = {}
    for u, v in spec.intra_edges + spec.bridges:
        nodes[u] = {}; nodes[v] = {}
        edges[(u, v)] = EdgeData(weight=1)
    graph = InteractionGraph(directed=False, nodes=nodes, edges=edges)

    def best_of(fn):
        best = None
        for _ in range(repeats):
            t0 = time.perf_counter()
            fn()
            dt = time.perf_counter() - t0
            best = dt if best is None else min(best, dt)
        return best

    index = graph.undirected_index()
    rows.append({
        "n": graph.node_count,
        "m": graph.edge_count,
        "betweenness": best_of(lambda: _accel.betweenness_arrays(
            index.n, index.indptr, index.indices, index.edge_ids, index.m)),
        "bfs_stats": best_of(lambda: _accel.geodesic_stats(
            index.n, index.indptr, index.indices)),
        "gn_exhaust": best_of(lambda: girvan_newman(graph, StopRule.exhaust())),
    })
print(json.dumps({"backend": _accel.active_backend(), "rows": rows}))
"""


def run_backend(backend: str, sizes: list[int], repeats: int) -> dict:
    env = dict(os.environ, CALLNET_ACCEL=backend)
    out = subprocess.run(
        [sys.executable, "-c", WORKER, json.dumps(sizes), str(repeats)],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    return json.loads(out.stdout.strip().splitlines()[-1])


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="50,100,200")
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    started = time.perf_counter()
    results = {}
    for backend in ("numba", "numpy"):
        try:
            results[backend] = run_backend(backend, sizes, args.repeats)
        except subprocess.CalledProcessError as exc:
            print(f"{backend} backend failed:\n{exc.stderr}", file=sys.stderr)
            raise

    header = f"{'n':>6} {'m':>6} {'kernel':>12} {'numba':>10} {'numpy':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for i, row in enumerate(results["numba"]["rows"]):
        other = results["numpy"]["rows"][i]
        for kernel in ("betweenness", "bfs_stats", "gn_exhaust"):
            fast, slow = row[kernel], other[kernel]
            print(
                f"{row['n']:>6} {row['m']:>6} {kernel:>12} "
                f"{fast * 1e3:>8.2f}ms {slow * 1e3:>8.2f}ms {slow / fast:>7.1f}x"
            )
    print(f"\ntotal wall time {time.perf_counter() - started:.1f}s "
          f"(best of {args.repeats} per cell)")


if __name__ == "__main__":
    main()
