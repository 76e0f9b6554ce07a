"""Trajectory simulation for ground-truth generation.

Walks are sampled from the choice process itself: at node ``i`` the next
hop goes to out-neighbor ``j`` with probability proportional to
``w_ij * strength_j``. Sampling is reproducible: trajectory ``k`` draws
from its own PCG64 stream seeded with ``SeedSequence(seed, spawn_key=(k,))``
(the root stream, no spawn key, is reserved for callers that need to draw
ground-truth strengths from the same master seed). Within a trajectory the
draw order is: optional start-node draw, then per step an optional stop
uniform followed by the choice uniform. Streams are private per trajectory,
which makes parallel generation exact: counts are integers and merging is
order-independent.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import backends
from .engine import EdgeTransitionTable, TrafficMarginals, _as_strengths
from .errors import SinkEncountered
from .graph import DirectedGraph, _read_only


@dataclass(frozen=True)
class TrajectorySpec:
    """How to sample: how many walks, how they end, where they start.

    Exactly one of ``length`` (fixed hop count) and ``stop_probability``
    (chance of stopping before each hop, geometric lengths) must be set.
    ``start`` is a node id, the string ``"uniform"``, or a probability
    vector over nodes.
    """

    num_trajectories: int
    length: int | None = None
    stop_probability: float | None = None
    start: int | str | np.ndarray = "uniform"
    seed: int = 0

    def __post_init__(self):
        if (self.length is None) == (self.stop_probability is None):
            raise ValueError("set exactly one of length / stop_probability")
        if self.length is not None and self.length < 0:
            raise ValueError("length must be nonnegative")
        if self.stop_probability is not None and not (
                0.0 < self.stop_probability < 1.0):
            raise ValueError("stop_probability must lie in (0, 1)")
        if self.num_trajectories < 0:
            raise ValueError("num_trajectories must be nonnegative")
        if isinstance(self.start, str):
            if self.start != "uniform":
                raise ValueError(f"unknown start mode {self.start!r}")
        elif not isinstance(self.start, (int, np.integer)):
            dist = np.ascontiguousarray(self.start, dtype=np.float64)
            if dist.ndim != 1 or dist.size == 0 or dist.min() < 0 \
                    or abs(dist.sum() - 1.0) > 1e-9:
                raise ValueError("start distribution must sum to 1")
            object.__setattr__(self, "start", _read_only(dist))


@dataclass(frozen=True)
class EdgeCounts:
    """Integer transition counts per edge, aligned with src/dst arrays."""

    n: int
    src: np.ndarray
    dst: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "src", np.ascontiguousarray(self.src, dtype=np.int64))
        object.__setattr__(self, "dst", np.ascontiguousarray(self.dst, dtype=np.int64))
        object.__setattr__(self, "counts", np.ascontiguousarray(self.counts, dtype=np.int64))
        if not (self.src.shape == self.dst.shape == self.counts.shape):
            raise ValueError("src/dst/counts length mismatch")
        if self.counts.size and self.counts.min() < 0:
            raise ValueError("counts must be nonnegative")

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def _trajectory_stream(seed: int, k: int) -> np.random.PCG64:
    return np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(k,)))


def _pick_start(spec: TrajectorySpec, gen: np.random.Generator, n: int) -> int:
    if isinstance(spec.start, (int, np.integer)):
        s = int(spec.start)
        if not 0 <= s < n:
            raise ValueError(f"start node {s} out of range")
        return s
    if isinstance(spec.start, str):
        return int(gen.integers(0, n))
    cum = np.cumsum(spec.start)
    return min(int(np.searchsorted(cum, gen.random(), side="right")),
               len(cum) - 1)


def sample_trajectories(g: DirectedGraph, lam, spec: TrajectorySpec, *,
                        allow_early_stop: bool = False,
                        threads: int = 1) -> EdgeCounts:
    """Sample walks under the given strengths; return per-edge hop counts.

    A walk reaching a node with no outgoing edges ends there if
    ``allow_early_stop`` is set and raises :class:`SinkEncountered`
    otherwise.
    """
    lam = _as_strengths(lam, g.n)
    if g.n == 0:
        raise ValueError("cannot sample on an empty graph")
    indptr, order = g.out_csr
    csr_dst = np.ascontiguousarray(g.dst[order])
    if g.m:
        vals = lam[csr_dst].copy()
        if g.weight is not None:
            vals *= g.weight[order]
        # row-local cumulative weights in one pass
        cum = np.cumsum(vals)
        starts = indptr[:-1].copy()
        starts[g.out_degree == 0] = 0  # unused; keeps indexing in range
        shift = np.repeat(cum[starts] - vals[starts], np.diff(indptr))
        cum_local = np.ascontiguousarray(cum - shift)
    else:
        cum_local = np.zeros(0, dtype=np.float64)

    num_hops = -1 if spec.length is None else int(spec.length)
    stop_p = 0.0 if spec.stop_probability is None else float(spec.stop_probability)

    def run_block(block: range) -> np.ndarray:
        counts = np.zeros(g.m, dtype=np.int64)
        impl = backends.impl()
        for k in block:
            bitgen = _trajectory_stream(spec.seed, k)
            gen = np.random.Generator(bitgen)
            start = _pick_start(spec, gen, g.n)
            _, status = impl.sample_trajectory(
                indptr, csr_dst, cum_local, bitgen, counts,
                start, num_hops, stop_p, allow_early_stop)
            if status == 2:
                raise SinkEncountered(
                    f"trajectory {k} reached a node with no outgoing edges; "
                    "pass allow_early_stop to truncate walks at sinks")
        return counts

    if threads <= 1 or spec.num_trajectories <= 1:
        slot_counts = run_block(range(spec.num_trajectories))
    else:
        cuts = np.linspace(0, spec.num_trajectories, threads + 1, dtype=int)
        blocks = [range(int(a), int(b)) for a, b in zip(cuts, cuts[1:]) if a < b]
        with ThreadPoolExecutor(max_workers=len(blocks)) as ex:
            results = list(ex.map(run_block, blocks))
        slot_counts = np.sum(results, axis=0, dtype=np.int64) if results \
            else np.zeros(g.m, dtype=np.int64)

    edge_counts = np.zeros(g.m, dtype=np.int64)
    edge_counts[order] = slot_counts
    return EdgeCounts(n=g.n, src=g.src, dst=g.dst, counts=edge_counts)


def aggregate_marginals(counts: EdgeCounts) -> TrafficMarginals:
    """Sum per-edge counts into per-node arrival/departure marginals."""
    c_out = np.bincount(counts.src, weights=counts.counts, minlength=counts.n)
    c_in = np.bincount(counts.dst, weights=counts.counts, minlength=counts.n)
    return TrafficMarginals(c_in=c_in, c_out=c_out)


def empirical_transitions(counts: EdgeCounts) -> EdgeTransitionTable:
    """Row-normalized counts over observed transitions.

    Only edges with a positive count appear; nodes whose outgoing counts
    are all zero have no rows.
    """
    row_sums = np.bincount(counts.src, weights=counts.counts, minlength=counts.n)
    keep = counts.counts > 0
    src = counts.src[keep]
    p = counts.counts[keep] / row_sums[src]
    return EdgeTransitionTable(n=counts.n, src=src, dst=counts.dst[keep], p=p)
