import numpy as np
import pytest

import hypermf as hm
from hypermf.errors import ParameterError
from hypermf.kernels import InteractionKernel


def test_linear_mean_values_and_constants():
    k = hm.linear_mean_kernel(2, box=(0.0, 1.0))
    heads = np.array([[0.2], [0.8]])  # head values for one sample
    assert float(k(np.array([0.4]), heads)[0]) == pytest.approx(0.5 - 0.4)
    assert k.bound == pytest.approx(1.0)       # b - a on the unit box
    assert k.lipschitz == pytest.approx(2.0)   # slope 1 in x plus 1/l per head
    assert k.symmetric_head


def test_linear_mean_separable_matches_direct(rng):
    k = hm.linear_mean_kernel(3, box=(-0.1, 1.1))
    tails = rng.uniform(-0.1, 1.1, 50)
    heads = rng.uniform(-0.1, 1.1, (3, 50))
    direct = k(tails, heads)
    assert k.separable is not None
    total = np.zeros(50)
    for term in k.separable:
        contrib = term.tail_factor(tails)
        for hf, h in zip(term.head_factors, heads):
            contrib = contrib * hf(h)
        total += contrib
    assert np.allclose(total, direct, atol=1e-12)


def test_kuramoto_bound_and_symmetry(rng):
    k = hm.kuramoto_kernel(2)
    x = rng.uniform(0, 1, 40)
    heads = rng.uniform(0, 1, (2, 40))
    v = k(x, heads)
    assert np.all(np.abs(v) <= 1.0 + 1e-12)
    assert np.allclose(v, k(x, heads[::-1]))  # head exchange symmetry


def test_skardal_family_orders():
    fam = hm.skardal_kernels()
    assert fam.orders == (1, 2, 3)
    k2 = fam.get(2)
    assert not k2.symmetric_head  # sin(2h1 - h2 - x) is head-asymmetric


def test_family_rejects_duplicate_orders():
    with pytest.raises(ParameterError):
        hm.KernelFamily([hm.linear_mean_kernel(1), hm.kuramoto_kernel(1)])


def test_check_assumption_clean_family():
    fam = hm.KernelFamily([hm.linear_mean_kernel(1), hm.linear_mean_kernel(2)])
    report = hm.check_assumption1(fam, eta=1.0, num_samples=2000, seed=5)
    assert report.ok
    assert report.series_bound == pytest.approx(1.0 + np.sqrt(2.0))
    assert report.series_lipschitz == pytest.approx(1 * 2.0 + 2 * 2.0)


def test_check_assumption_detects_wrong_constants():
    lying = InteractionKernel(
        order=1,
        fn=lambda x, h: 3.0 * (h[0] - x),
        bound=0.5, lipschitz=0.1, symmetric_head=True, name="lying")
    report = hm.check_assumption1(hm.KernelFamily([lying]), eta=1.0,
                                  num_samples=4000, seed=2)
    assert not report.ok
    assert report.bound_violations and report.lipschitz_violations


def test_check_assumption_detects_false_head_symmetry():
    asym = InteractionKernel(
        order=2,
        fn=lambda x, h: h[0] - 0.5 * h[1],
        bound=2.0, lipschitz=2.0, symmetric_head=True, name="asym")
    report = hm.check_assumption1(hm.KernelFamily([asym]), eta=1.0,
                                  num_samples=2000, seed=3)
    assert report.head_symmetry_violations


def test_opinion_kernel_bound(rng):
    k = hm.opinion_diam_kernel(2, lam=0.5, box=(0.0, 1.0))
    x = rng.uniform(0, 1, 30)
    heads = rng.uniform(0, 1, (2, 30))
    assert np.all(np.abs(k(x, heads)) <= k.bound + 1e-12)
