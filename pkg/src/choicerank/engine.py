"""Inference engine for the network choice model.

The model: a user at node ``i`` faces the alternatives ``N+_i`` (the
out-neighbors of ``i``) and moves to ``j`` with probability

    p_ij = w_ij * strength_j / sum_{k in N+_i} w_ik * strength_k,

so one positive number per node, plus the known edge weights, determines
every transition probability. The per-node aggregate traffic — arrivals
``c_in[i]`` and departures ``c_out[i]`` — is a sufficient statistic for the
strengths: the log-likelihood collapses to

    LL(strengths) = sum_i [ c_in[i] * log strength_i
                            - c_out[i] * log sum_{k in N+_i} w_ik * strength_k ]

up to a constant, and with independent Gamma(alpha, beta) priors the
log-posterior adds ``(alpha - 1) * log strength_i - beta * strength_i`` per
node. For ``alpha > 1`` the posterior has a unique maximizer on any graph;
:func:`fit` finds it by a minorize-maximize iteration with the closed-form
update

    rate_j       = c_out[j] / sum_{k in N+_j} w_jk * strength_k   (0 when c_out[j] = 0)
    strength_i'  = (c_in[i] + alpha - 1) / (sum_{j in N-_i} w_ji * rate_j + beta).

Each iteration is two edge-scatter passes plus two node passes — O(m + n)
time — over exactly four float64 values per node (``c_in``, ``c_out``, a
message accumulator, and the current rate-or-strength). Edges may be
streamed in any order; results differ across orders only by floating-point
summation effects.

The same update can be derived as an expectation-maximization step by
introducing one latent per-node exposure variable (Gamma-distributed with
shape ``c_out[i]`` and rate equal to the node's neighborhood strength);
maximizing the expected complete-data log-posterior reproduces the update
above exactly, so the two viewpoints share one implementation. Strengths
are never renormalized between iterations: the prior rate fixes the scale
(halving ``beta`` doubles every strength and changes no transition
probability).

The convergence test of :func:`fit` (mean absolute strength change per
node) needs the previous strength vector, which is one n-vector beyond the
four-array contract; :func:`iterate` runs a fixed number of updates within
exactly the four arrays and is the mode to use when memory is the
constraint.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import backends
from .errors import ModelInconsistencyError
from .graph import DirectedGraph, _read_only


@dataclass(frozen=True)
class TrafficMarginals:
    """Per-node arrival (``c_in``) and departure (``c_out``) counts.

    Counts are real-valued (averaged or rescaled logs are fine), finite and
    nonnegative. One side may be ``None`` (partial data); every engine
    operation requires both, see :func:`conserve_flow`.
    """

    c_in: np.ndarray | None
    c_out: np.ndarray | None

    def __post_init__(self):
        if self.c_in is None and self.c_out is None:
            raise ValueError("at least one of c_in / c_out must be present")
        for name in ("c_in", "c_out"):
            side = getattr(self, name)
            if side is None:
                continue
            side = np.ascontiguousarray(side, dtype=np.float64)
            if side.ndim != 1:
                raise ValueError(f"{name} must be one-dimensional")
            if not np.isfinite(side).all():
                raise ValueError(f"{name} contains non-finite entries")
            if side.size and side.min() < 0.0:
                raise ValueError(f"{name} contains negative entries")
            object.__setattr__(self, name, _read_only(side))
        if (self.c_in is not None and self.c_out is not None
                and self.c_in.shape != self.c_out.shape):
            raise ValueError("c_in and c_out lengths differ")

    @property
    def n(self) -> int:
        side = self.c_in if self.c_in is not None else self.c_out
        return side.size

    @property
    def is_full(self) -> bool:
        return self.c_in is not None and self.c_out is not None


def conserve_flow(t: TrafficMarginals) -> TrafficMarginals:
    """Fill the missing side of partial marginals by flow conservation.

    Under conservation every arrival is matched by a departure, so the
    missing side equals the present one entrywise. Refuses full marginals
    (nothing to fill; overwriting silently would hide data) and, by the
    type invariant, there is always at least one side present.
    """
    if t.is_full:
        raise ValueError("both marginal sides present; refusing to overwrite")
    side = t.c_in if t.c_in is not None else t.c_out
    return TrafficMarginals(c_in=side.copy(), c_out=side.copy())


@dataclass(frozen=True)
class PriorConfig:
    """Gamma prior hyperparameters: shape ``alpha``, rate ``beta``."""

    alpha: float = 2.0
    beta: float = 1.0

    def __post_init__(self):
        if not (self.alpha > 1.0):
            raise ValueError(
                "alpha must be strictly greater than 1: the prior needs a "
                "positive mode for the posterior maximizer to exist on any "
                "graph. Prior-free maximum likelihood is deliberately not a "
                "supported mode; see the diagnostics module for the ways it "
                "degenerates.")
        if not (self.beta > 0.0):
            raise ValueError("beta must be positive")


@dataclass(frozen=True)
class FitReport:
    """Result of :func:`fit`.

    ``final_delta`` is the last per-node mean absolute strength change,
    the quantity compared against ``tol``. When recorded, the log-posterior
    trace is non-decreasing up to relative slack 1e-10.
    """

    strengths: np.ndarray
    iterations: int
    final_delta: float
    converged: bool
    log_posterior_trace: list[float] | None = None


@dataclass
class EdgeTransitionTable:
    """Per-edge transition probabilities, row-normalized per source node."""

    n: int
    src: np.ndarray
    dst: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        self.src = np.ascontiguousarray(self.src, dtype=np.int64)
        self.dst = np.ascontiguousarray(self.dst, dtype=np.int64)
        self.p = np.ascontiguousarray(self.p, dtype=np.float64)
        if not (self.src.shape == self.dst.shape == self.p.shape):
            raise ValueError("src/dst/p length mismatch")
        # Zero entries are legal (empirical rows, score-based baselines);
        # the model's own tables are strictly positive. Summation rounding
        # may push a ratio a few ulp past 1.
        if self.p.size and (not np.isfinite(self.p).all()
                            or self.p.min() < 0.0
                            or self.p.max() > 1.0 + 1e-12):
            raise ValueError("probabilities must lie in [0, 1]")
        row_sums = np.bincount(self.src, weights=self.p, minlength=self.n)
        rows = np.bincount(self.src, minlength=self.n) > 0
        if rows.any() and np.abs(row_sums[rows] - 1.0).max() > 1e-12:
            worst = int(np.argmax(np.where(rows, np.abs(row_sums - 1.0), 0.0)))
            raise ValueError(
                f"row {worst} sums to {row_sums[worst]!r}, not 1 within 1e-12")

    @cached_property
    def _csr(self):
        order = np.argsort(self.src, kind="stable")
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.src, minlength=self.n), out=indptr[1:])
        return indptr, order

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Destination ids and probabilities of node i's out-row."""
        indptr, order = self._csr
        idx = order[indptr[i]:indptr[i + 1]]
        return self.dst[idx], self.p[idx]

    def row_nodes(self) -> np.ndarray:
        """Nodes that have at least one row entry."""
        return np.unique(self.src)


@dataclass
class StreamState:
    """The engine's per-node working state: exactly four float64 arrays
    (``c_in``, ``c_out``, message accumulator, current rate-or-strength)."""

    c_in: np.ndarray
    c_out: np.ndarray
    acc: np.ndarray
    x: np.ndarray

    @classmethod
    def create(cls, g: DirectedGraph, t: TrafficMarginals,
               init: np.ndarray | None = None) -> "StreamState":
        n = g.n
        x = np.ones(n, dtype=np.float64) if init is None \
            else _as_strengths(init, n).copy()
        return cls(c_in=t.c_in.astype(np.float64).copy(),
                   c_out=t.c_out.astype(np.float64).copy(),
                   acc=np.zeros(n, dtype=np.float64),
                   x=x)

    @property
    def strengths(self) -> np.ndarray:
        """Current strengths (valid between full iterations)."""
        return self.x

    def node_state_arrays(self) -> tuple[np.ndarray, ...]:
        return (self.c_in, self.c_out, self.acc, self.x)

    def node_state_nbytes(self) -> int:
        return sum(a.nbytes for a in self.node_state_arrays())


def _as_strengths(lam, n: int) -> np.ndarray:
    lam = np.ascontiguousarray(lam, dtype=np.float64)
    if lam.shape != (n,):
        raise ValueError(f"expected {n} strengths, got shape {lam.shape}")
    if lam.size and (not np.isfinite(lam).all() or lam.min() <= 0.0):
        raise ValueError("strengths must be positive and finite")
    return lam


def _require_consistent(g: DirectedGraph, t: TrafficMarginals) -> None:
    if not t.is_full:
        raise ModelInconsistencyError(
            "marginals are partial; apply conserve_flow first")
    if t.n != g.n:
        raise ModelInconsistencyError(
            f"marginals cover {t.n} nodes, graph has {g.n}")
    bad = (t.c_out > 0.0) & (g.out_degree == 0)
    if bad.any():
        node = int(np.nonzero(bad)[0][0])
        raise ModelInconsistencyError(
            f"node {node} has positive outgoing traffic but no outgoing "
            "edges; no choice distribution can produce such data")


def _shard_bounds(m: int, threads: int) -> list[tuple[int, int]]:
    cuts = np.linspace(0, m, threads + 1, dtype=np.int64)
    return [(int(cuts[i]), int(cuts[i + 1])) for i in range(threads)
            if cuts[i] < cuts[i + 1]]


def _scatter(g: DirectedGraph, values: np.ndarray, acc: np.ndarray,
             direction: str, threads: int = 1) -> None:
    """Edge-scatter pass into ``acc`` (zeroed here).

    ``threads > 1`` shards the edge list; each shard accumulates into a
    private buffer and buffers are reduced in shard order, so results are
    deterministic for a fixed thread count (they differ from the
    single-threaded reference only by summation order).
    """
    kernel = (backends.impl().out_neighbor_sums if direction == "out"
              else backends.impl().in_neighbor_sums)
    acc[:] = 0.0
    if threads <= 1 or g.m == 0:
        kernel(g.src, g.dst, g.weight, values, acc)
        return
    shards = _shard_bounds(g.m, threads)
    buffers = [np.zeros(g.n, dtype=np.float64) for _ in shards]

    def run(args):
        (a, b), buf = args
        w = None if g.weight is None else g.weight[a:b]
        kernel(g.src[a:b], g.dst[a:b], w, values, buf)

    with ThreadPoolExecutor(max_workers=len(shards)) as ex:
        list(ex.map(run, zip(shards, buffers)))
    for buf in buffers:
        acc += buf


def _mm_iteration(g: DirectedGraph, st: StreamState, alpha: float,
                  beta: float, threads: int = 1) -> None:
    if threads <= 1:
        backends.impl().mm_iteration(g.src, g.dst, g.weight, st.c_in,
                                     st.c_out, st.acc, st.x, alpha, beta)
        return
    _scatter(g, st.x, st.acc, "out", threads)
    st.x[:] = 0.0
    np.divide(st.c_out, st.acc, out=st.x, where=st.c_out > 0.0)
    _scatter(g, st.x, st.acc, "in", threads)
    st.acc += beta
    np.add(st.c_in, alpha - 1.0, out=st.x)
    st.x /= st.acc


def log_likelihood(g: DirectedGraph, t: TrafficMarginals, lam) -> float:
    """Log-likelihood of the strengths given marginal traffic, up to the
    strength-independent constant.

    Equal to the per-edge log-likelihood of any edge-level counts
    consistent with the marginals (sufficiency), minus that constant.
    """
    lam = _as_strengths(lam, g.n)
    _require_consistent(g, t)
    acc = np.zeros(g.n, dtype=np.float64)
    _scatter(g, lam, acc, "out")
    mask = t.c_out > 0.0
    value = float(t.c_in @ np.log(lam))
    if mask.any():
        value -= float(t.c_out[mask] @ np.log(acc[mask]))
    return value


def log_posterior(g: DirectedGraph, t: TrafficMarginals, lam,
                  prior: PriorConfig | None = None) -> float:
    """Log-posterior up to an additive constant: the log-likelihood plus
    ``(alpha - 1) log strength_i - beta strength_i`` summed over nodes."""
    prior = prior or PriorConfig()
    lam = _as_strengths(lam, g.n)
    prior_term = float((prior.alpha - 1.0) * np.log(lam).sum()
                       - prior.beta * lam.sum())
    return log_likelihood(g, t, lam) + prior_term


def mm_step(g: DirectedGraph, t: TrafficMarginals, lam,
            prior: PriorConfig | None = None) -> np.ndarray:
    """One minorize-maximize update; never decreases the log-posterior."""
    prior = prior or PriorConfig()
    lam = _as_strengths(lam, g.n)
    _require_consistent(g, t)
    st = StreamState.create(g, t, init=lam)
    _mm_iteration(g, st, prior.alpha, prior.beta)
    out = st.x
    if not np.isfinite(out).all():
        raise ModelInconsistencyError("non-finite strengths after update")
    return out


def iterate(g: DirectedGraph, t: TrafficMarginals,
            prior: PriorConfig | None = None, num_iterations: int = 1, *,
            state: StreamState | None = None, threads: int = 1) -> StreamState:
    """Run a fixed number of updates in streaming mode.

    This is the memory-strict path: per-node residency is exactly the four
    float64 arrays of :class:`StreamState` (no convergence monitoring, which
    would need the previous strength vector as a fifth). Pass ``state`` to
    continue from an earlier call.
    """
    prior = prior or PriorConfig()
    _require_consistent(g, t)
    if state is None:
        state = StreamState.create(g, t)
    for _ in range(num_iterations):
        _mm_iteration(g, state, prior.alpha, prior.beta, threads)
    if not np.isfinite(state.x).all():
        raise ModelInconsistencyError("non-finite strengths during iteration")
    return state


def fit(g: DirectedGraph, t: TrafficMarginals,
        prior: PriorConfig | None = None, *, tol: float = 1e-8,
        max_iter: int = 10000, init: np.ndarray | None = None,
        record_trace: bool = False, threads: int = 1,
        progress=None) -> FitReport:
    """Estimate the maximum a-posteriori strengths.

    Iterates the closed-form update from ``init`` (all ones by default)
    until the mean absolute per-node change drops below ``tol`` or
    ``max_iter`` is reached. ``record_trace`` stores the log-posterior after
    every iteration (costs an extra pass per iteration; meant for tests).
    ``progress``, if given, is called as ``progress(iteration, delta)``.
    """
    prior = prior or PriorConfig()
    _require_consistent(g, t)
    state = StreamState.create(g, t, init=init)
    prev = state.x.copy()  # convergence monitor; beyond the 4-array contract
    trace: list[float] | None = [] if record_trace else None
    n = max(g.n, 1)
    converged = False
    delta = float("inf")
    iterations = 0
    for iterations in range(1, max_iter + 1):
        _mm_iteration(g, state, prior.alpha, prior.beta, threads)
        delta = float(np.abs(state.x - prev).sum()) / n
        if trace is not None:
            trace.append(log_posterior(g, t, state.x, prior))
        if progress is not None:
            progress(iterations, delta)
        if not np.isfinite(delta):
            raise ModelInconsistencyError(
                "non-finite strengths during fit; the input data is "
                "inconsistent with the model")
        if delta < tol:
            converged = True
            break
        prev[:] = state.x
    return FitReport(strengths=_read_only(state.x.copy()),
                     iterations=iterations, final_delta=delta,
                     converged=converged, log_posterior_trace=trace)


def transition_probabilities(g: DirectedGraph, lam) -> EdgeTransitionTable:
    """Edge transition probabilities implied by the strengths."""
    lam = _as_strengths(lam, g.n)
    acc = np.zeros(g.n, dtype=np.float64)
    _scatter(g, lam, acc, "out")
    p = lam[g.dst] / acc[g.src]
    if g.weight is not None:
        p *= g.weight
    return EdgeTransitionTable(n=g.n, src=g.src, dst=g.dst, p=p)
