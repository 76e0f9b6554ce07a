"""Hilbert space-filling-curve edge ordering.

Sorting edges by the Hilbert index of their (src, dst) cell keeps both
endpoints of consecutive edges close in id space, which improves cache
locality of the per-node state arrays during edge-streaming passes. The
ordering is purely a storage optimization: the edge multiset is unchanged.

Convention (fixed, documented): the grid side is the smallest power of two
covering the node ids, and the first-order curve visits the (src, dst)
cells in the order (0,0), (1,0), (1,1), (0,1) — i.e. it sweeps the source
axis first, starting at the lower-left corner.
"""

from __future__ import annotations

import numpy as np

from .graph import DirectedGraph


def grid_side(n: int) -> int:
    """Smallest power of two >= max(n, 1)."""
    side = 1
    while side < n:
        side <<= 1
    return side


def hilbert_index(src, dst, n: int) -> np.ndarray:
    """Hilbert curve index of each (src, dst) cell, as uint64."""
    from . import backends

    src = np.ascontiguousarray(src, dtype=np.int64)
    dst = np.ascontiguousarray(dst, dtype=np.int64)
    return backends.impl().hilbert_indices(src, dst, n)


def hilbert_reorder(g: DirectedGraph) -> DirectedGraph:
    """Return the same graph with edges sorted in Hilbert curve order."""
    keys = hilbert_index(g.src, g.dst, g.n)
    perm = np.argsort(keys, kind="stable")
    return g.reordered(perm, "hilbert")
