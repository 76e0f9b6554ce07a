"""Heuristic transition-probability baselines.

Three reference estimators, each row-normalized over every nonempty
out-neighborhood:

* **traffic** — proportional to the arrival count of the target node;
* **pagerank** — proportional to the target's PageRank score;
* **uniform** — equiprobable transitions.

Rows whose scores sum to zero (possible only for the traffic baseline)
fall back to uniform.
"""

from __future__ import annotations

import numpy as np

from .engine import EdgeTransitionTable, TrafficMarginals
from .graph import DirectedGraph


def _normalized_by_target(g: DirectedGraph, scores: np.ndarray) -> EdgeTransitionTable:
    vals = scores[g.dst].astype(np.float64)
    row_sums = np.bincount(g.src, weights=vals, minlength=g.n)
    degenerate = (row_sums == 0.0) & (g.out_degree > 0)
    if degenerate.any():
        fallback = degenerate[g.src]
        vals[fallback] = 1.0
        row_sums = np.bincount(g.src, weights=vals, minlength=g.n)
    return EdgeTransitionTable(n=g.n, src=g.src, dst=g.dst,
                               p=vals / row_sums[g.src])


def baseline_traffic(g: DirectedGraph, t: TrafficMarginals) -> EdgeTransitionTable:
    """Transitions proportional to the target node's arrival count."""
    if t.c_in is None:
        raise ValueError("traffic baseline needs arrival counts")
    if t.c_in.size != g.n:
        raise ValueError("marginals length does not match graph")
    return _normalized_by_target(g, t.c_in)


def pagerank(g: DirectedGraph, damping: float = 0.85, tol: float = 1e-10,
             max_iter: int = 1000) -> np.ndarray:
    """PageRank scores by power iteration.

    The random surfer follows out-edges uniformly (edge weights are
    ignored: this baseline models blind clicking); dangling mass and
    teleportation are redistributed uniformly. Scores sum to 1. Iterates
    until the L1 change drops below ``tol``.
    """
    if not 0.0 < damping < 1.0:
        raise ValueError("damping must lie in (0, 1)")
    n = g.n
    if n == 0:
        return np.zeros(0, dtype=np.float64)
    deg = g.out_degree
    dangling = deg == 0
    r = np.full(n, 1.0 / n)
    out = np.empty(n)
    for _ in range(max_iter):
        contrib = r / np.maximum(deg, 1)
        out[:] = np.bincount(g.dst, weights=contrib[g.src], minlength=n)
        dangling_mass = float(r[dangling].sum())
        out *= damping
        out += (1.0 - damping + damping * dangling_mass) / n
        if np.abs(out - r).sum() < tol:
            r, out = out, r
            break
        r, out = out, r
    return r / r.sum()


def baseline_pagerank(g: DirectedGraph, scores: np.ndarray | None = None,
                      damping: float = 0.85) -> EdgeTransitionTable:
    """Transitions proportional to the target node's PageRank score."""
    if scores is None:
        scores = pagerank(g, damping=damping)
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != (g.n,):
        raise ValueError("scores length does not match graph")
    return _normalized_by_target(g, scores)


def baseline_uniform(g: DirectedGraph) -> EdgeTransitionTable:
    """Equiprobable transitions over each out-neighborhood."""
    return _normalized_by_target(g, np.ones(g.n, dtype=np.float64))
