"""Shared fixtures: canonical instances and the independent MAP oracle."""

from __future__ import annotations

import numpy as np
import pytest
from scipy.optimize import minimize

import choicerank as cr


@pytest.fixture
def star():
    """Two-edge star: node 0 chooses between 1 and 2; closed-form optimum
    (1, 4/3, 2/3) under the default prior."""
    g = cr.DirectedGraph(3, [0, 0], [1, 2])
    t = cr.TrafficMarginals(c_in=[0.0, 7.0, 3.0], c_out=[10.0, 0.0, 0.0])
    return g, t


@pytest.fixture
def seven_node():
    """Strongly connected 7-node graph whose alternative-set hypergraph
    splits into {0,1,2,5,6} and {3,4}."""
    src = [0, 0, 1, 1, 2, 2, 3, 4, 5, 5, 6, 6, 6, 6]
    dst = [1, 2, 2, 5, 3, 4, 4, 0, 0, 6, 0, 1, 2, 5]
    return cr.DirectedGraph(7, src, dst)


@pytest.fixture
def four_node_pathology():
    """Connected hypergraph but a non-strongly-connected comparison graph.

    The marginals admit exactly one feasible flow (1,0,1,0,1,0,1), under
    which no comparison edge leaves {0, 1}: scaling those strengths up
    increases the likelihood without bound.
    """
    g = cr.DirectedGraph(4, [0, 0, 1, 1, 2, 2, 3], [1, 2, 2, 3, 0, 3, 0])
    t = cr.TrafficMarginals(c_in=[2.0, 1.0, 1.0, 0.0],
                            c_out=[1.0, 1.0, 1.0, 1.0])
    return g, t


def _random_instance(rng, n_max=20, weighted=False, max_count=50):
    """Random graph (ring + extras, so every node has an out-edge) with
    marginals aggregated from random per-edge counts."""
    n = int(rng.integers(3, n_max + 1))
    src = list(range(n))
    dst = [(i + 1) % n for i in range(n)]
    have = set(zip(src, dst))
    for _ in range(int(rng.integers(n, 3 * n))):
        s, d = int(rng.integers(n)), int(rng.integers(n))
        if (s, d) not in have:
            have.add((s, d))
            src.append(s)
            dst.append(d)
    w = rng.uniform(0.2, 3.0, len(src)) if weighted else None
    g = cr.DirectedGraph(n, src, dst, w)
    counts = rng.integers(0, max_count, g.m)
    c_out = np.bincount(g.src, weights=counts, minlength=n)
    c_in = np.bincount(g.dst, weights=counts, minlength=n)
    return g, cr.TrafficMarginals(c_in=c_in, c_out=c_out), counts


@pytest.fixture
def random_instance():
    return _random_instance


def _map_oracle(g, t, prior):
    """Independent MAP solve: generic convex maximization of the
    log-posterior in log-parameter space (L-BFGS with analytic gradient)."""
    n = g.n
    w = g.weight if g.weight is not None else np.ones(g.m)

    def neg_lp(theta):
        lam = np.exp(theta)
        acc = np.bincount(g.src, weights=w * lam[g.dst], minlength=n)
        mask = t.c_out > 0
        lp = t.c_in @ theta - t.c_out[mask] @ np.log(acc[mask])
        lp += (prior.alpha - 1.0) * theta.sum() - prior.beta * lam.sum()
        return -lp

    def neg_grad(theta):
        lam = np.exp(theta)
        acc = np.bincount(g.src, weights=w * lam[g.dst], minlength=n)
        rate = np.where(t.c_out > 0, t.c_out / np.where(acc > 0, acc, 1.0), 0.0)
        pull = np.bincount(g.dst, weights=w * rate[g.src], minlength=n)
        return -(t.c_in + prior.alpha - 1.0 - lam * pull - prior.beta * lam)

    res = minimize(neg_lp, np.zeros(n), jac=neg_grad, method="L-BFGS-B",
                   options=dict(maxiter=50000, ftol=1e-17, gtol=1e-12))
    return np.exp(res.x)


@pytest.fixture
def map_oracle():
    return _map_oracle
