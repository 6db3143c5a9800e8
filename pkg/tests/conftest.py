"""Shared independent oracles for the test suite.

These deliberately re-derive quantities with the dumbest possible code
(dense loops, exhaustive enumeration, CDF integrals) so the fast library
paths are checked against something that cannot share their bugs.
"""

import itertools
import math

import numpy as np
import pytest

import hypermf as hm


def brute_force_forces(hypergraph, kernels, states):
    """Triple-loop force evaluation over every ordered loop-free tuple.

    Works directly from stored tensor rows via `weight`, expanding symmetry
    by querying each ordered (tail, heads) combination independently.
    """
    x = np.asarray(states, dtype=np.float64)
    n = x.shape[0]
    out = np.zeros_like(x)
    for kernel in kernels:
        ell = kernel.order
        tensor = hypergraph.tensor(ell)
        if tensor is None:
            raise AssertionError(f"no stored tensor of order {ell}")
        for i in range(1, n + 1):
            for heads in itertools.permutations([j for j in range(1, n + 1) if j != i], ell):
                wgt = tensor.weight(i, heads)
                if wgt == 0.0:
                    continue
                hvals = np.array([x[j - 1] for j in heads])
                out[i - 1] += wgt * float(kernel(np.array(x[i - 1]), hvals))
    return out


def w1_distance_cdf(mu, nu):
    """Exact 1-D Wasserstein-1 via the CDF integral (equal total masses)."""
    assert abs(mu.total_mass - nu.total_mass) < 1e-12
    pts = np.unique(np.concatenate([mu.positions, nu.positions]))
    fa = np.array([mu.masses[mu.positions <= p].sum() for p in pts])
    fb = np.array([nu.masses[nu.positions <= p].sum() for p in pts])
    return float(np.sum(np.abs(fa - fb)[:-1] * np.diff(pts)))


def random_step_levels(rng, parts, orders, scale=1.0):
    """Random nonnegative step hypergraphon with symmetric levels."""
    levels = {}
    for order in orders:
        raw = rng.uniform(0.0, scale, size=(parts,) * (order + 1))
        sym = np.zeros_like(raw)
        for perm in itertools.permutations(range(order + 1)):
            sym += np.transpose(raw, perm)
        levels[order] = sym / math.factorial(order + 1)
    return hm.StepHypergraphon(parts, levels)


def random_hypergraph(rng, num_nodes, orders, density=0.7, fully_symmetric=False,
                      canonical=True):
    """Random sparse hypergraph with canonical (sorted-head) storage."""
    entries = {}
    for order in orders:
        pairs = []
        for tail in range(1, num_nodes + 1):
            others = [j for j in range(1, num_nodes + 1) if j != tail]
            for heads in itertools.combinations(others, order):
                if canonical and fully_symmetric and any(h < tail for h in heads):
                    continue
                if rng.uniform() < density:
                    pairs.append(((tail,) + heads, float(rng.uniform(0.1, 1.0))))
        entries[order] = pairs
    return hm.Hypergraph.from_entries(num_nodes, max(orders) + 1, entries,
                                      fully_symmetric=fully_symmetric,
                                      canonical=canonical)


@pytest.fixture
def rng():
    return np.random.default_rng(20260815)
