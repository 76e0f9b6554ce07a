"""Per-node error metrics and choice-weighted evaluation reports.

Two row metrics compare a ground-truth distribution ``p`` over a node's
out-neighbors against an estimate ``q`` on the same support:

* ``kl_divergence`` — sum of ``p * log(p / q)`` with natural log and the
  ``0 * log 0 = 0`` convention;
* ``rank_displacement`` — mean absolute difference between the two
  rankings (by decreasing probability, ties broken by ascending node id),
  normalized by the squared row size; lies in ``[0, 1)`` and depends only
  on the orderings.

:func:`evaluate` aggregates the per-node errors "over choices": each
node's error is weighted by its departure count, and summaries use
weighted means and inverted-CDF weighted percentiles. Nodes with a single
out-edge always score zero displacement, so they are excluded from the
displacement summaries (but kept for KL and in the per-node table).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .engine import EdgeTransitionTable
from .simulate import EdgeCounts

SUMMARY_STATS = ("weighted_mean", "p5", "p25", "median", "p75", "p95")

METADATA = {
    "kl_log": "natural",
    "tie_break": "ascending node id",
    "weighting": "per-node departure count",
    "rank_disp_summary_excludes_degree_1": "true",
    "percentiles": "weighted inverted CDF",
}


class SupportMismatch(ValueError):
    """Truth and estimate rows do not cover the same alternatives."""


def kl_divergence(p, q) -> float:
    """KL divergence between aligned rows; requires q > 0 wherever p > 0."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise SupportMismatch(
            f"rows have different sizes: {p.shape} vs {q.shape}")
    mask = p > 0.0
    if np.any(q[mask] <= 0.0):
        raise SupportMismatch("estimate assigns zero where truth is positive")
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def _ranks(values: np.ndarray, ids: np.ndarray) -> np.ndarray:
    """Rank of each entry when sorted by decreasing value, ties by id."""
    order = np.lexsort((ids, -values))
    ranks = np.empty(values.size, dtype=np.int64)
    ranks[order] = np.arange(values.size)
    return ranks


def rank_displacement(p, q, ids=None) -> float:
    """Normalized displacement between the rankings induced by two rows."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise SupportMismatch(
            f"rows have different sizes: {p.shape} vs {q.shape}")
    k = p.size
    if k == 0:
        raise SupportMismatch("empty row")
    ids = np.arange(k, dtype=np.int64) if ids is None \
        else np.asarray(ids, dtype=np.int64)
    disp = np.abs(_ranks(p, ids) - _ranks(q, ids)).sum()
    return float(disp) / (k * k)


def weighted_quantile(values, weights, q: float) -> float:
    """Inverted-CDF weighted quantile: the smallest value whose cumulative
    weight reaches ``q`` times the total weight."""
    values = np.asarray(values, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if values.size == 0:
        return float("nan")
    order = np.argsort(values, kind="stable")
    cum = np.cumsum(weights[order])
    target = q * cum[-1]
    idx = int(np.searchsorted(cum, target, side="left"))
    return float(values[order[min(idx, values.size - 1)]])


def weighted_summary(values, weights) -> dict[str, float]:
    values = np.asarray(values, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if values.size == 0 or weights.sum() == 0.0:
        return {stat: float("nan") for stat in SUMMARY_STATS}
    out = {"weighted_mean": float(values @ weights / weights.sum())}
    for stat, q in (("p5", 0.05), ("p25", 0.25), ("median", 0.5),
                    ("p75", 0.75), ("p95", 0.95)):
        out[stat] = weighted_quantile(values, weights, q)
    return out


@dataclass
class EvalReport:
    """Per-node errors plus choice-weighted summaries per method."""

    methods: list[str]
    nodes: np.ndarray
    out_degree: np.ndarray
    weights: np.ndarray
    kl: dict[str, np.ndarray]
    rank_disp: dict[str, np.ndarray]
    summary: dict[str, dict[str, dict[str, float]]]
    per_degree: dict[str, dict[int, dict[str, float]]]
    metadata: dict[str, str] = field(default_factory=lambda: dict(METADATA))


def _table_rows(table: EdgeTransitionTable) -> dict[int, dict[int, float]]:
    rows: dict[int, dict[int, float]] = {}
    for s, d, p in zip(table.src.tolist(), table.dst.tolist(),
                       table.p.tolist()):
        rows.setdefault(s, {})[d] = p
    return rows


def evaluate(truth_counts: EdgeCounts,
             estimates: dict[str, EdgeTransitionTable]) -> EvalReport:
    """Score estimates against empirical rows from edge-level counts.

    Every node with a positive outgoing count is evaluated; its truth row
    spans all of its out-edges (zero-count edges included, with probability
    zero). Each estimate must cover exactly the same alternatives.
    """
    methods = list(estimates)
    row_sums = np.bincount(truth_counts.src, weights=truth_counts.counts,
                           minlength=truth_counts.n)
    eval_nodes = np.nonzero(row_sums > 0)[0]

    order = np.argsort(truth_counts.src, kind="stable")
    indptr = np.zeros(truth_counts.n + 1, dtype=np.int64)
    np.cumsum(np.bincount(truth_counts.src, minlength=truth_counts.n),
              out=indptr[1:])

    est_rows = {name: _table_rows(tab) for name, tab in estimates.items()}
    kl: dict[str, list[float]] = {name: [] for name in methods}
    disp: dict[str, list[float]] = {name: [] for name in methods}
    degrees = []
    for i in eval_nodes.tolist():
        sl = order[indptr[i]:indptr[i + 1]]
        dsts = truth_counts.dst[sl]
        if dsts.size != np.unique(dsts).size:
            raise ValueError(f"duplicate edges in truth counts for node {i}")
        p = truth_counts.counts[sl] / row_sums[i]
        degrees.append(dsts.size)
        for name in methods:
            row = est_rows[name].get(i)
            if row is None or set(row) != set(dsts.tolist()):
                raise SupportMismatch(
                    f"estimate {name!r} does not cover node {i}'s "
                    "out-neighborhood")
            q = np.array([row[d] for d in dsts.tolist()])
            kl[name].append(kl_divergence(p, q))
            disp[name].append(rank_displacement(p, q, ids=dsts))

    degrees = np.asarray(degrees, dtype=np.int64)
    weights = row_sums[eval_nodes]
    kl_arr = {name: np.asarray(v) for name, v in kl.items()}
    disp_arr = {name: np.asarray(v) for name, v in disp.items()}

    multi = degrees > 1
    summary: dict[str, dict[str, dict[str, float]]] = {}
    per_degree: dict[str, dict[int, dict[str, float]]] = {}
    for name in methods:
        summary[name] = {
            "kl": weighted_summary(kl_arr[name], weights),
            "rank_disp": weighted_summary(disp_arr[name][multi],
                                          weights[multi]),
        }
        by_deg: dict[int, dict[str, float]] = {}
        for deg in sorted(set(degrees.tolist())):
            sel = degrees == deg
            w = weights[sel]
            by_deg[int(deg)] = {
                "kl_mean": float(kl_arr[name][sel] @ w / w.sum()),
                "rank_disp_mean": float(disp_arr[name][sel] @ w / w.sum()),
                "count": int(sel.sum()),
                "weight": float(w.sum()),
            }
        per_degree[name] = by_deg

    return EvalReport(methods=methods, nodes=eval_nodes,
                      out_degree=degrees, weights=weights,
                      kl=kl_arr, rank_disp=disp_arr,
                      summary=summary, per_degree=per_degree)
