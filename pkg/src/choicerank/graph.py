"""Directed graph storage: loading, validation, degree views, edge streaming.

Nodes are dense integer ids ``0..n-1``. Edges are stored as parallel
``src``/``dst`` (and optional ``weight``) arrays in a well-defined storage
order; every consumer in the package is required to produce results that do
not depend on that order (beyond floating-point summation effects), so
reordering the arrays is purely a locality optimization.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import ParseError

STORAGE_ORDERS = ("as-loaded", "hilbert", "src-sorted")

_CACHE_MAGIC = b"CRNK1"


def _read_only(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


class DirectedGraph:
    """An immutable directed graph, optionally edge-weighted.

    Invariants enforced on construction:

    * ``0 <= src, dst < n`` for every edge;
    * no duplicate ``(src, dst)`` pair (alternative sets are sets);
    * every weight is strictly positive and finite;
    * self-loops are allowed (a node may be its own alternative).
    """

    def __init__(self, n, src, dst, weight=None, storage_order="as-loaded",
                 validate=True):
        if storage_order not in STORAGE_ORDERS:
            raise ValueError(f"unknown storage order {storage_order!r}")
        self.n = int(n)
        self.src = _read_only(np.ascontiguousarray(src, dtype=np.int64))
        self.dst = _read_only(np.ascontiguousarray(dst, dtype=np.int64))
        if weight is None:
            self.weight = None
        else:
            self.weight = _read_only(np.ascontiguousarray(weight, dtype=np.float64))
        self.storage_order = storage_order
        if validate:
            self._validate()

    def _validate(self):
        if self.n < 0:
            raise ValueError("node count must be nonnegative")
        if self.src.shape != self.dst.shape or self.src.ndim != 1:
            raise ValueError("src and dst must be 1-d arrays of equal length")
        m = self.m
        if m and (self.src.min() < 0 or self.src.max() >= self.n):
            raise ValueError("edge source id out of range")
        if m and (self.dst.min() < 0 or self.dst.max() >= self.n):
            raise ValueError("edge destination id out of range")
        if self.weight is not None:
            if self.weight.shape != self.src.shape:
                raise ValueError("weight array length mismatch")
            if m and (not np.isfinite(self.weight).all() or self.weight.min() <= 0.0):
                raise ValueError("edge weights must be positive and finite")
        if m:
            key = self.src.astype(np.uint64) * np.uint64(self.n) + self.dst.astype(np.uint64)
            uniq, counts = np.unique(key, return_counts=True)
            if uniq.size != m:
                s, d = divmod(int(uniq[counts > 1][0]), self.n)
                raise ValueError(f"duplicate edge ({s}, {d})")

    @property
    def m(self) -> int:
        return self.src.size

    @property
    def is_weighted(self) -> bool:
        return self.weight is not None

    @cached_property
    def out_degree(self) -> np.ndarray:
        return _read_only(np.bincount(self.src, minlength=self.n).astype(np.int64))

    @cached_property
    def in_degree(self) -> np.ndarray:
        return _read_only(np.bincount(self.dst, minlength=self.n).astype(np.int64))

    @cached_property
    def out_csr(self) -> tuple[np.ndarray, np.ndarray]:
        """Edge positions grouped by source node.

        Returns ``(indptr, order)``: edges out of node ``i`` sit at positions
        ``order[indptr[i]:indptr[i+1]]`` in the graph's edge arrays.
        """
        order = np.argsort(self.src, kind="stable").astype(np.int64)
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(self.out_degree, out=indptr[1:])
        return _read_only(indptr), _read_only(order)

    @cached_property
    def in_csr(self) -> tuple[np.ndarray, np.ndarray]:
        """Edge positions grouped by destination node."""
        order = np.argsort(self.dst, kind="stable").astype(np.int64)
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(self.in_degree, out=indptr[1:])
        return _read_only(indptr), _read_only(order)

    def out_neighbors(self, i: int) -> np.ndarray:
        indptr, order = self.out_csr
        return self.dst[order[indptr[i]:indptr[i + 1]]]

    def effective_weights(self) -> np.ndarray:
        """Per-edge weights, all ones for an unweighted graph."""
        if self.weight is not None:
            return self.weight
        return np.ones(self.m, dtype=np.float64)

    def reordered(self, perm: np.ndarray, storage_order: str) -> "DirectedGraph":
        """Same edge multiset with edges permuted by ``perm``."""
        w = None if self.weight is None else self.weight[perm]
        return DirectedGraph(self.n, self.src[perm], self.dst[perm], w,
                             storage_order=storage_order, validate=False)

    def __repr__(self):
        w = "weighted" if self.is_weighted else "unweighted"
        return (f"DirectedGraph(n={self.n}, m={self.m}, {w}, "
                f"order={self.storage_order!r})")


@dataclass(frozen=True)
class DegreeCensus:
    """Exact in/out degree per node; both columns sum to the edge count."""

    out_degree: np.ndarray
    in_degree: np.ndarray


def degree_census(g: DirectedGraph) -> DegreeCensus:
    return DegreeCensus(out_degree=g.out_degree.copy(), in_degree=g.in_degree.copy())


def src_sorted_reorder(g: DirectedGraph) -> DirectedGraph:
    """Sort edges by source id (stable); a common streaming layout."""
    perm = np.argsort(g.src, kind="stable")
    return g.reordered(perm, "src-sorted")


def load_edge_list(path, weighted: bool = False, num_nodes: int | None = None) -> DirectedGraph:
    """Load a TSV edge list: ``src<TAB>dst`` or ``src<TAB>dst<TAB>weight``.

    Lines starting with ``#`` and blank lines are ignored. Node count is
    ``1 + max node id`` unless ``num_nodes`` overrides it. Duplicate edges,
    nonpositive weights, and malformed lines are reported with their line
    number.
    """
    path = Path(path)
    srcs: list[int] = []
    dsts: list[int] = []
    weights: list[float] = []
    want = 3 if weighted else 2
    with open(path, "rt", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t") if "\t" in line else line.split()
            if len(parts) != want:
                raise ParseError(
                    f"expected {want} fields, got {len(parts)}", path, lineno)
            try:
                s = int(parts[0])
                d = int(parts[1])
            except ValueError:
                raise ParseError(f"non-integer node id in {line!r}", path, lineno)
            if s < 0 or d < 0:
                raise ParseError("node ids must be nonnegative", path, lineno)
            if weighted:
                try:
                    w = float(parts[2])
                except ValueError:
                    raise ParseError(f"bad weight {parts[2]!r}", path, lineno)
                if not (w > 0.0) or not np.isfinite(w):
                    raise ParseError(f"nonpositive weight {w!r}", path, lineno)
                weights.append(w)
            srcs.append(s)
            dsts.append(d)
    max_id = max(max(srcs, default=-1), max(dsts, default=-1))
    n = max_id + 1
    if num_nodes is not None:
        if num_nodes < n:
            raise ParseError(
                f"node id {max_id} out of range for --nodes {num_nodes}", path)
        n = num_nodes
    try:
        return DirectedGraph(
            n,
            np.asarray(srcs, dtype=np.int64),
            np.asarray(dsts, dtype=np.int64),
            np.asarray(weights, dtype=np.float64) if weighted else None,
        )
    except ValueError as exc:
        raise ParseError(str(exc), path) from exc


def save_binary_cache(g: DirectedGraph, path) -> None:
    """Write the binary edge cache: magic ``CRNK1``, little-endian u64 n and
    m, then m records of (u64 src, u64 dst, f64 weight)."""
    rec = np.empty(g.m, dtype=np.dtype([("src", "<u8"), ("dst", "<u8"), ("w", "<f8")]))
    rec["src"] = g.src
    rec["dst"] = g.dst
    rec["w"] = g.effective_weights()
    with open(path, "wb") as fh:
        fh.write(_CACHE_MAGIC)
        fh.write(struct.pack("<QQ", g.n, g.m))
        fh.write(rec.tobytes())


def load_binary_cache(path) -> DirectedGraph:
    """Read the binary edge cache written by :func:`save_binary_cache`.

    A cache whose weights are all exactly 1.0 loads as an unweighted graph
    (the two are the same choice model).
    """
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(5)
        if magic != _CACHE_MAGIC:
            raise ParseError(f"bad magic {magic!r}", path)
        header = fh.read(16)
        if len(header) != 16:
            raise ParseError("truncated header", path)
        n, m = struct.unpack("<QQ", header)
        body = fh.read()
    rec_dtype = np.dtype([("src", "<u8"), ("dst", "<u8"), ("w", "<f8")])
    if len(body) != m * rec_dtype.itemsize:
        raise ParseError(
            f"expected {m} records ({m * rec_dtype.itemsize} bytes), "
            f"got {len(body)} bytes", path)
    rec = np.frombuffer(body, dtype=rec_dtype)
    weight = rec["w"].astype(np.float64)
    if np.all(weight == 1.0):
        weight = None
    try:
        return DirectedGraph(int(n), rec["src"].astype(np.int64),
                             rec["dst"].astype(np.int64), weight)
    except ValueError as exc:
        raise ParseError(str(exc), path) from exc
