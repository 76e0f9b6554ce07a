"""Benchmark the compiled kernels against the pure-numpy fallback.

Times one fit iteration (two edge-scatter passes + two node passes) for
each backend and edge order, plus trajectory-sampling throughput. Run:

    python benchmarks/bench_backends.py --nodes 1000000 --edges 10000000
"""

from __future__ import annotations

import argparse
import time

import numpy as np

import choicerank as cr
from choicerank.engine import iterate


def build_graph(rng, n, m):
    ring_src = np.arange(n, dtype=np.int64)
    ring_dst = (ring_src + 1) % n
    extra = max(m - n, 0)
    s = rng.integers(0, n, size=int(extra * 1.05) + 1, dtype=np.int64)
    d = rng.integers(0, n, size=int(extra * 1.05) + 1, dtype=np.int64)
    key = s.astype(np.uint64) * np.uint64(n) + d.astype(np.uint64)
    ring_key = ring_src.astype(np.uint64) * np.uint64(n) + ring_dst.astype(np.uint64)
    key = np.unique(key[~np.isin(key, ring_key)])[:extra]
    rng.shuffle(key)
    src = np.concatenate([ring_src, (key // np.uint64(n)).astype(np.int64)])
    dst = np.concatenate([ring_dst, (key % np.uint64(n)).astype(np.int64)])
    perm = rng.permutation(src.size)
    return cr.DirectedGraph(n, src[perm], dst[perm])


def time_iteration(g, t, repeats):
    state = iterate(g, t, num_iterations=1)  # warmup
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        iterate(g, t, num_iterations=1, state=state)
        times.append(time.perf_counter() - t0)
    return min(times)


def time_sampling(g, lam, hops):
    spec = cr.TrajectorySpec(num_trajectories=1, length=hops, start=0, seed=1)
    t0 = time.perf_counter()
    cr.sample_trajectories(g, lam, spec)
    return time.perf_counter() - t0


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nodes", type=int, default=200_000)
    ap.add_argument("--edges", type=int, default=2_000_000)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--sample-hops", type=int, default=500_000)
    args = ap.parse_args()

    rng = np.random.default_rng(1)
    g = build_graph(rng, args.nodes, args.edges)
    c = rng.integers(100, 501, size=g.n).astype(np.float64)
    t = cr.TrafficMarginals(c_in=c, c_out=c)
    lam = rng.lognormal(0.0, 1.0, g.n)
    print(f"graph: n={g.n:,} m={g.m:,}")

    graphs = {"as-loaded": g, "hilbert": cr.hilbert_reorder(g)}
    backends = cr.available_backends()
    print(f"\n{'backend':<8} {'order':<10} {'s/iteration':>12}")
    for name in backends:
        cr.use_backend(name)
        for order, graph in graphs.items():
            sec = time_iteration(graph, t, args.repeats)
            print(f"{name:<8} {order:<10} {sec:>12.4f}")

    print(f"\n{'backend':<8} {'hops/s':>14}")
    for name in backends:
        cr.use_backend(name)
        sec = time_sampling(graphs["hilbert"], lam, args.sample_hops)
        print(f"{name:<8} {args.sample_hops / sec:>14,.0f}")
    cr.use_backend("auto")


if __name__ == "__main__":
    main()
