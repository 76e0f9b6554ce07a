"""The compiled and pure kernels must be observably identical."""

import subprocess
import sys

import numpy as np
import pytest

import choicerank as cr
from choicerank import backends

both = pytest.mark.skipif(len(cr.available_backends()) < 2,
                          reason="compiled core unavailable")


def _mods():
    return backends._BACKENDS["cython"], backends._BACKENDS["python"]


def _random_edges(rng, n=200, m=1500):
    src = rng.integers(0, n, m).astype(np.int64)
    dst = rng.integers(0, n, m).astype(np.int64)
    w = rng.uniform(0.1, 2.0, m)
    return src, dst, w


@both
class TestScatterParity:
    def test_out_sums_bitwise(self):
        cy, py = _mods()
        rng = np.random.default_rng(21)
        src, dst, w = _random_edges(rng)
        values = rng.uniform(0.1, 5.0, 200)
        for weight in (None, w):
            a = np.zeros(200)
            b = np.zeros(200)
            cy.out_neighbor_sums(src, dst, weight, values, a)
            py.out_neighbor_sums(src, dst, weight, values, b)
            np.testing.assert_array_equal(a, b)

    def test_in_sums_bitwise(self):
        cy, py = _mods()
        rng = np.random.default_rng(22)
        src, dst, w = _random_edges(rng)
        values = rng.uniform(0.1, 5.0, 200)
        for weight in (None, w):
            a = np.zeros(200)
            b = np.zeros(200)
            cy.in_neighbor_sums(src, dst, weight, values, a)
            py.in_neighbor_sums(src, dst, weight, values, b)
            np.testing.assert_array_equal(a, b)

    def test_mm_iteration_bitwise(self):
        cy, py = _mods()
        rng = np.random.default_rng(23)
        n = 150
        src = np.concatenate([np.arange(n), rng.integers(0, n, 600)]).astype(np.int64)
        dst = np.concatenate([(np.arange(n) + 1) % n,
                              rng.integers(0, n, 600)]).astype(np.int64)
        w = rng.uniform(0.1, 2.0, src.size)
        c_in = rng.uniform(0, 40, n)
        c_out = rng.uniform(0, 40, n)
        c_out[rng.integers(0, n, 10)] = 0.0
        for weight in (None, w):
            xa = np.ones(n)
            xb = np.ones(n)
            za = np.zeros(n)
            zb = np.zeros(n)
            for _ in range(5):
                cy.mm_iteration(src, dst, weight, c_in, c_out, za, xa, 2.0, 1.0)
                py.mm_iteration(src, dst, weight, c_in, c_out, zb, xb, 2.0, 1.0)
            np.testing.assert_array_equal(xa, xb)


@both
class TestSamplerParity:
    def test_identical_counts_and_status(self):
        cy, py = _mods()
        rng = np.random.default_rng(24)
        n = 50
        src = np.concatenate([np.arange(n), rng.integers(0, n, 200)]).astype(np.int64)
        dst = np.concatenate([(np.arange(n) + 1) % n,
                              rng.integers(0, n, 200)]).astype(np.int64)
        keep = np.unique(src.astype(np.uint64) * np.uint64(n) + dst.astype(np.uint64),
                         return_index=True)[1]
        src, dst = src[keep], dst[keep]
        g = cr.DirectedGraph(n, src, dst)
        indptr, order = g.out_csr
        csr_dst = np.ascontiguousarray(g.dst[order])
        lam = rng.uniform(0.2, 3.0, n)
        vals = lam[csr_dst]
        cum = np.cumsum(vals)
        starts = indptr[:-1].copy()
        starts[np.asarray(g.out_degree) == 0] = 0
        shift = np.repeat(cum[starts] - vals[starts], np.diff(indptr))
        cum_local = np.ascontiguousarray(cum - shift)
        for stop_p, hops in ((0.0, 500), (0.1, -1)):
            ca = np.zeros(g.m, dtype=np.int64)
            cb = np.zeros(g.m, dtype=np.int64)
            ha, sa = cy.sample_trajectory(
                indptr, csr_dst, cum_local,
                np.random.PCG64(np.random.SeedSequence(7)), ca, 0,
                hops, stop_p, False)
            hb, sb = py.sample_trajectory(
                indptr, csr_dst, cum_local,
                np.random.PCG64(np.random.SeedSequence(7)), cb, 0,
                hops, stop_p, False)
            assert (ha, sa) == (hb, sb)
            np.testing.assert_array_equal(ca, cb)


@both
class TestBackendSelection:
    def test_use_backend_switches_fit(self, star):
        g, t = star
        cr.use_backend("python")
        try:
            r_py = cr.fit(g, t)
            assert cr.backend_name() == "python"
        finally:
            cr.use_backend("auto")
        r_auto = cr.fit(g, t)
        np.testing.assert_array_equal(r_py.strengths, r_auto.strengths)

    def test_unknown_backend_rejected(self):
        with pytest.raises(ValueError, match="unknown backend"):
            cr.use_backend("fortran")

    def test_env_var_selection(self):
        out = subprocess.run(
            [sys.executable, "-c",
             "import choicerank; print(choicerank.backend_name())"],
            env={"PATH": "/usr/bin:/bin", "CHOICERANK_BACKEND": "python"},
            capture_output=True, text=True)
        assert out.stdout.strip() == "python"


class TestThreads:
    def test_threaded_fit_close_to_reference(self, random_instance):
        rng = np.random.default_rng(25)
        g, t, _ = random_instance(rng, n_max=40)
        a = cr.fit(g, t, threads=1).strengths
        b = cr.fit(g, t, threads=3).strengths
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-9)

    def test_threaded_simulation_exact(self, random_instance):
        rng = np.random.default_rng(26)
        g, _, _ = random_instance(rng, n_max=30)
        lam = rng.uniform(0.5, 2.0, g.n)
        spec = cr.TrajectorySpec(num_trajectories=40, length=50, seed=5)
        a = cr.sample_trajectories(g, lam, spec, threads=1)
        b = cr.sample_trajectories(g, lam, spec, threads=3)
        np.testing.assert_array_equal(a.counts, b.counts)
