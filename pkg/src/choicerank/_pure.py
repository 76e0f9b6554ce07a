"""Pure-numpy kernels; the reference semantics for the compiled core.

Every function here must be observably identical to its counterpart in
``_core`` (same values bit for bit, same RNG stream consumption), so the
two backends are interchangeable.
"""

from __future__ import annotations

import numpy as np

NAME = "python"

_CHUNK = 512  # uniforms drawn per refill of a trajectory's buffer


def hilbert_indices(src, dst, n: int) -> np.ndarray:
    """Hilbert curve index of each (src, dst) cell as uint64.

    Vectorized walk from the top quadrant bit down; the rotate/flip step
    relies on uint64 wraparound, which agrees with the two's-complement
    arithmetic of the scalar reference algorithm.
    """
    side = 1
    while side < n:
        side <<= 1
    # Swapped axes realize the "source axis first" convention.
    x = np.asarray(dst, dtype=np.uint64).copy()
    y = np.asarray(src, dtype=np.uint64).copy()
    d = np.zeros(x.shape, dtype=np.uint64)
    s = side >> 1
    while s > 0:
        su = np.uint64(s)
        rx = ((x & su) != 0).astype(np.uint64)
        ry = ((y & su) != 0).astype(np.uint64)
        d += np.uint64(s) * np.uint64(s) * ((np.uint64(3) * rx) ^ ry)
        # rotate/flip the quadrant so the sub-curve is in canonical pose
        lower = ry == 0
        flip = lower & (rx == 1)
        s1 = np.uint64(s - 1)
        fx = np.where(flip, s1 - x, x)
        fy = np.where(flip, s1 - y, y)
        x = np.where(lower, fy, fx)
        y = np.where(lower, fx, fy)
        s >>= 1
    return d


def out_neighbor_sums(src, dst, weight, values, acc):
    """acc[src[e]] += weight[e] * values[dst[e]] for every edge e."""
    vals = values[dst] if weight is None else weight * values[dst]
    acc += np.bincount(src, weights=vals, minlength=acc.shape[0])


def in_neighbor_sums(src, dst, weight, values, acc):
    """acc[dst[e]] += weight[e] * values[src[e]] for every edge e."""
    vals = values[src] if weight is None else weight * values[src]
    acc += np.bincount(dst, weights=vals, minlength=acc.shape[0])


def mm_iteration(src, dst, weight, c_in, c_out, acc, x, alpha, beta):
    """One full update: on entry ``x`` holds strengths, on exit the new ones.

    Transient masks and gathers are allocated here; the compiled kernel does
    the same arithmetic allocation-free.
    """
    n = acc.shape[0]
    vals = x[dst] if weight is None else weight * x[dst]
    acc[:] = np.bincount(src, weights=vals, minlength=n)
    x[:] = 0.0
    np.divide(c_out, acc, out=x, where=c_out > 0.0)
    vals = x[src] if weight is None else weight * x[src]
    acc[:] = np.bincount(dst, weights=vals, minlength=n)
    acc += beta
    np.add(c_in, alpha - 1.0, out=x)
    x /= acc


def sample_trajectory(indptr, choice_dst, cum_weights, bit_generator, counts,
                      start, num_hops, stop_probability, allow_early_stop):
    """Walk one trajectory, accumulating per-edge-slot visit counts.

    Per step, in this order: end at a sink (or flag it), draw the optional
    stop uniform, draw the choice uniform and hop. Uniforms may be drawn
    from the stream in blocks; the stream is private to the trajectory and
    discarded afterwards, so over-drawing is harmless.

    Returns ``(hops_taken, status)`` with status 0 for a normal end, 1 for
    an allowed early stop at a sink, 2 for a sink hit while disallowed.
    """
    gen = np.random.Generator(bit_generator)
    geometric = stop_probability > 0.0
    buf = np.empty(0, dtype=np.float64)
    pos = 0
    cur = int(start)
    hops = 0
    status = 0
    while True:
        if not geometric and hops >= num_hops:
            break
        lo = indptr[cur]
        hi = indptr[cur + 1]
        if lo == hi:
            status = 1 if allow_early_stop else 2
            break
        if geometric:
            if pos >= buf.size:
                buf = gen.random(_CHUNK)
                pos = 0
            if buf[pos] < stop_probability:
                pos += 1
                break
            pos += 1
        if pos >= buf.size:
            buf = gen.random(_CHUNK if geometric else max(int(num_hops - hops), 1))
            pos = 0
        r = buf[pos] * cum_weights[hi - 1]
        pos += 1
        k = lo + int(np.searchsorted(cum_weights[lo:hi], r, side="right"))
        if k >= hi:
            k = hi - 1
        counts[k] += 1
        cur = int(choice_dst[k])
        hops += 1
    return hops, status
