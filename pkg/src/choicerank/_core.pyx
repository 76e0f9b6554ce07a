# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled edge-streaming kernels.

Mirrors ``_pure`` exactly: same arithmetic in the same order, same RNG
stream consumption. The edge loops run allocation-free over preallocated
per-node state arrays and release the GIL.
"""

import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from numpy.random cimport bitgen_t

ctypedef cnp.int64_t i64
ctypedef cnp.uint64_t u64

NAME = "cython"


def hilbert_indices(const i64[::1] src, const i64[::1] dst, i64 n):
    """Hilbert curve index of each (src, dst) cell as uint64."""
    cdef u64 side = 1
    while side < <u64> n:
        side <<= 1
    out = np.empty(src.shape[0], dtype=np.uint64)
    cdef u64[::1] o = out
    cdef Py_ssize_t e, m = src.shape[0]
    cdef u64 x, y, s, rx, ry, d, tmp
    with nogil:
        for e in range(m):
            # swapped axes: the curve sweeps the source axis first
            x = <u64> dst[e]
            y = <u64> src[e]
            d = 0
            s = side >> 1
            while s > 0:
                rx = 1 if (x & s) != 0 else 0
                ry = 1 if (y & s) != 0 else 0
                d += s * s * ((3 * rx) ^ ry)
                if ry == 0:
                    if rx == 1:
                        x = s - 1 - x
                        y = s - 1 - y
                    tmp = x
                    x = y
                    y = tmp
                s >>= 1
            o[e] = d
    return out


def out_neighbor_sums(const i64[::1] src, const i64[::1] dst, object weight,
                      const double[::1] values, double[::1] acc):
    """acc[src[e]] += weight[e] * values[dst[e]] for every edge e."""
    cdef Py_ssize_t e, m = src.shape[0]
    cdef const double[::1] w
    if weight is None:
        with nogil:
            for e in range(m):
                acc[src[e]] += values[dst[e]]
    else:
        w = weight
        with nogil:
            for e in range(m):
                acc[src[e]] += w[e] * values[dst[e]]


def in_neighbor_sums(const i64[::1] src, const i64[::1] dst, object weight,
                     const double[::1] values, double[::1] acc):
    """acc[dst[e]] += weight[e] * values[src[e]] for every edge e."""
    cdef Py_ssize_t e, m = src.shape[0]
    cdef const double[::1] w
    if weight is None:
        with nogil:
            for e in range(m):
                acc[dst[e]] += values[src[e]]
    else:
        w = weight
        with nogil:
            for e in range(m):
                acc[dst[e]] += w[e] * values[src[e]]


def mm_iteration(const i64[::1] src, const i64[::1] dst, object weight,
                 const double[::1] c_in, const double[::1] c_out,
                 double[::1] acc, double[::1] x, double alpha, double beta):
    """One full update: on entry ``x`` holds strengths, on exit the new ones."""
    cdef Py_ssize_t e, i
    cdef Py_ssize_t m = src.shape[0], n = acc.shape[0]
    cdef double shift = alpha - 1.0
    cdef const double[::1] w
    if weight is None:
        with nogil:
            for i in range(n):
                acc[i] = 0.0
            for e in range(m):
                acc[src[e]] += x[dst[e]]
            for i in range(n):
                x[i] = c_out[i] / acc[i] if c_out[i] > 0.0 else 0.0
            for i in range(n):
                acc[i] = 0.0
            for e in range(m):
                acc[dst[e]] += x[src[e]]
            for i in range(n):
                x[i] = (c_in[i] + shift) / (acc[i] + beta)
    else:
        w = weight
        with nogil:
            for i in range(n):
                acc[i] = 0.0
            for e in range(m):
                acc[src[e]] += w[e] * x[dst[e]]
            for i in range(n):
                x[i] = c_out[i] / acc[i] if c_out[i] > 0.0 else 0.0
            for i in range(n):
                acc[i] = 0.0
            for e in range(m):
                acc[dst[e]] += w[e] * x[src[e]]
            for i in range(n):
                x[i] = (c_in[i] + shift) / (acc[i] + beta)


def sample_trajectory(const i64[::1] indptr, const i64[::1] choice_dst,
                      const double[::1] cum_weights, object bit_generator,
                      i64[::1] counts, i64 start, i64 num_hops,
                      double stop_probability, bint allow_early_stop):
    """Walk one trajectory; see the ``_pure`` counterpart for the contract."""
    cdef bitgen_t *rng
    capsule = bit_generator.capsule
    if not PyCapsule_IsValid(capsule, "BitGenerator"):
        raise ValueError("invalid BitGenerator capsule")
    rng = <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")

    cdef bint geometric = stop_probability > 0.0
    cdef i64 cur = start, hops = 0
    cdef int status = 0
    cdef i64 lo, hi, il, ih, mid
    cdef double r
    with nogil:
        while True:
            if not geometric and hops >= num_hops:
                break
            lo = indptr[cur]
            hi = indptr[cur + 1]
            if lo == hi:
                status = 1 if allow_early_stop else 2
                break
            if geometric:
                if rng.next_double(rng.state) < stop_probability:
                    break
            r = rng.next_double(rng.state) * cum_weights[hi - 1]
            # smallest slot in [lo, hi) with cumulative weight > r
            il = lo
            ih = hi
            while il < ih:
                mid = (il + ih) >> 1
                if cum_weights[mid] > r:
                    ih = mid
                else:
                    il = mid + 1
            if il >= hi:
                il = hi - 1
            counts[il] += 1
            cur = choice_dst[il]
            hops += 1
    return hops, status
