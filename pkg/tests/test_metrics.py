import itertools

import numpy as np
import pytest

import hypermf as hm
from hypermf.errors import ParameterError, ResourceLimitError
from hypermf.metrics import cut_norm_exact, cut_norm_heuristic

from conftest import random_step_levels, w1_distance_cdf


def dirac(x, mass=1.0):
    return hm.DiscreteMeasure([x], [mass])


# ---------------------------------------------------------------------------
# flat distance


def test_d_bl_dirac_oracles():
    assert hm.d_bl(dirac(0.0), dirac(0.5)) == pytest.approx(0.5)
    # far-apart unit diracs saturate at 2 (1 from each total-variation side)
    assert hm.d_bl(dirac(0.0), dirac(3.0)) == pytest.approx(2.0)
    assert hm.d_bl(dirac(0.2), dirac(0.2)) == pytest.approx(0.0)


def test_d_bl_scales_with_mass():
    assert hm.d_bl(dirac(0.0, 2.0), dirac(0.5, 2.0)) == pytest.approx(1.0)
    # unequal masses: the excess mass pays the sup-norm price
    assert hm.d_bl(dirac(0.0, 1.0), dirac(0.0, 1.5)) == pytest.approx(0.5)


def test_d_bl_equals_w1_on_narrow_support(rng):
    # for equal-mass measures supported in an interval of length <= 2 the
    # optimal 1-Lipschitz potential fits inside |phi| <= 1, so flat = W1
    for _ in range(25):
        na, nb = rng.integers(1, 6, 2)
        mu = hm.DiscreteMeasure(rng.uniform(0, 1.6, na), rng.uniform(0.1, 1, na))
        masses_b = rng.uniform(0.1, 1, nb)
        masses_b *= mu.total_mass / masses_b.sum()
        nu = hm.DiscreteMeasure(rng.uniform(0, 1.6, nb), masses_b)
        assert hm.d_bl(mu, nu) == pytest.approx(w1_distance_cdf(mu, nu), abs=1e-9)


def test_d_bl_metric_properties(rng):
    measures = [hm.DiscreteMeasure(rng.uniform(0, 2, 3), rng.uniform(0.1, 1, 3))
                for _ in range(6)]
    for mu, nu in itertools.combinations(measures, 2):
        assert hm.d_bl(mu, nu) == pytest.approx(hm.d_bl(nu, mu), abs=1e-10)
    for mu, nu, pi in itertools.combinations(measures, 3):
        assert hm.d_bl(mu, pi) <= hm.d_bl(mu, nu) + hm.d_bl(nu, pi) + 1e-9


def test_d_bl_rejects_bad_measures():
    with pytest.raises(ParameterError):
        hm.DiscreteMeasure([], [])
    with pytest.raises(ParameterError):
        hm.DiscreteMeasure([0.0], [-1.0])


# ---------------------------------------------------------------------------
# fibered distance


def test_d_p_nu_two_fiber_oracle():
    mu = hm.FiberedAtoms([dirac(0.0), dirac(0.0)])
    nu = hm.FiberedAtoms([dirac(0.2), dirac(0.4)])
    # p=2: sqrt(0.5*0.04 + 0.5*0.16) = sqrt(0.1)
    assert hm.d_p_nu(mu, nu, 2.0) == pytest.approx(np.sqrt(0.1))
    assert hm.d_p_nu(mu, nu, 1.0) == pytest.approx(0.3)


def test_d_p_nu_monotone_in_p(rng):
    mu = hm.FiberedAtoms([dirac(float(v)) for v in rng.uniform(0, 1, 8)])
    nu = hm.FiberedAtoms([dirac(float(v)) for v in rng.uniform(0, 1, 8)])
    d1 = hm.d_p_nu(mu, nu, 1.0)
    d2 = hm.d_p_nu(mu, nu, 2.0)
    assert d1 <= d2 + 1e-12


def test_d_p_nu_overlay_of_unequal_grids():
    # 2 fibers vs 3 fibers: the overlay splits [0,1] at {1/3, 1/2, 2/3}
    mu = hm.FiberedAtoms([dirac(0.0), dirac(1.0)])
    nu = hm.FiberedAtoms([dirac(0.1), dirac(0.1), dirac(0.9)])
    expected = (1.0 / 3.0) * 0.1 + (1.0 / 6.0) * 0.1 + (1.0 / 6.0) * 0.9 \
        + (1.0 / 3.0) * 0.1
    assert hm.d_p_nu(mu, nu, 1.0) == pytest.approx(expected)


def test_rebin_conserves_mass_and_refines_exactly():
    atoms = hm.FiberedAtoms([dirac(0.1), dirac(0.5), dirac(0.7), dirac(0.2)])
    coarse = hm.rebin_fibered_atoms(atoms, 2)
    assert coarse.n_fibers == 2
    for f in coarse.fibers:
        assert f.total_mass == pytest.approx(1.0)
    # refining by an integer factor and coming back is lossless for d_p_nu
    fine = hm.rebin_fibered_atoms(atoms, 8)
    assert hm.d_p_nu(fine, atoms, 1.0) == pytest.approx(0.0, abs=1e-12)


def test_fibered_atoms_from_density_matches_cells():
    rho = hm.FiberedDensity.uniform(4, 8, 0.0, 1.0, support=(0.0, 1.0))
    atoms = hm.fibered_atoms_from_density(rho)
    assert atoms.n_fibers == 4
    for f in atoms.fibers:
        assert f.total_mass == pytest.approx(1.0)
        assert np.allclose(f.positions, rho.x_centers)


# ---------------------------------------------------------------------------
# cut norms


def brute_cut_norm(diff):
    """Exhaustive 0/1 assignment over all subsets of every slot."""
    arr = np.asarray(diff, dtype=np.float64)
    n = arr.shape[0]
    dims = arr.ndim
    best = 0.0
    subsets = list(itertools.product((0.0, 1.0), repeat=n))
    for choice in itertools.product(subsets, repeat=dims):
        val = arr
        for vec in choice[1:]:
            val = np.tensordot(val, np.array(vec), axes=([1], [0]))
        val = float(np.dot(np.array(choice[0]), val))
        best = max(best, abs(val))
    return best / n ** dims


def test_cut_norm_identity_vs_swap_oracle():
    diff = np.eye(2) - (np.ones((2, 2)) - np.eye(2))
    assert cut_norm_exact(diff) == pytest.approx(0.25)
    assert hm.operator_norm_infty_to_1(diff) == pytest.approx(0.5)


def test_cut_norm_exact_matches_brute_force(rng):
    for _ in range(30):
        order = int(rng.integers(1, 3))
        n = int(rng.integers(2, 4))
        diff = rng.uniform(-1, 1, size=(n,) * (order + 1))
        assert cut_norm_exact(diff) == pytest.approx(brute_cut_norm(diff), abs=1e-12)


def test_heuristic_is_a_lower_bound_and_often_tight(rng):
    tight = 0
    for trial in range(40):
        n = int(rng.integers(2, 5))
        diff = rng.uniform(-1, 1, size=(n, n))
        exact = cut_norm_exact(diff)
        heur = cut_norm_heuristic(diff, restarts=6, seed=trial)
        assert heur <= exact + 1e-12
        if heur >= exact - 1e-9:
            tight += 1
    assert tight >= 35  # coordinate ascent almost always lands on the optimum


def test_cut_norm_exact_raises_beyond_thresholds():
    with pytest.raises(ResourceLimitError):
        cut_norm_exact(np.zeros((25, 25)))
    with pytest.raises(ResourceLimitError):
        cut_norm_exact(np.zeros((9, 9, 9)))


def test_d_square_zero_for_identical_and_alpha_weighting(rng):
    w = random_step_levels(rng, 3, (1, 2))
    res = hm.d_square(w, w)
    assert res.total == pytest.approx(0.0)
    wb = random_step_levels(rng, 3, (1, 2))
    res1 = hm.d_square(w, wb)
    per = {o: v for o, v, _, _ in res1.per_order}
    assert res1.total == pytest.approx(0.5 * per[1] + 0.25 * per[2])


def test_d_square_common_refinement(rng):
    # a step function refined onto a finer grid is the same object
    w = random_step_levels(rng, 2, (1,))
    fine = hm.StepHypergraphon(4, {1: np.repeat(np.repeat(w.level(1), 2, 0), 2, 1)})
    assert hm.d_square(w, fine).total == pytest.approx(0.0, abs=1e-15)


def test_delta_square_perm_finds_relabeling(rng):
    w = random_step_levels(rng, 3, (1,))
    perm = (2, 0, 1)
    permuted = hm.StepHypergraphon(3, {1: w.level(1)[np.ix_(perm, perm)]})
    res = hm.delta_square_perm(w, permuted)
    assert res.total == pytest.approx(0.0, abs=1e-15)
    assert hm.d_square(w, permuted).total > 1e-3  # labeled distance sees the shuffle


def test_l1_level_distance_step_step_exact():
    a = hm.StepHypergraphon(2, {1: np.array([[0.0, 1.0], [1.0, 0.0]])})
    b = hm.StepHypergraphon(2, {1: np.array([[0.5, 1.0], [0.0, 0.0]])})
    # |0-0.5|+|1-1|+|1-0|+|0-0| over 4 equal cells
    assert hm.l1_level_distance(a, b, 1) == pytest.approx(1.5 / 4.0)


def test_l1_level_distance_needs_a_step_argument():
    w = hm.homogeneous_hypergraphon(0.2, orders=(1,))
    with pytest.raises(ParameterError):
        hm.l1_level_distance(w, w, 1)


def test_l1_fast_path_matches_plain_quadrature():
    # the diameter-indicator fast path must agree with brute quadrature
    w = hm.homogeneous_hypergraphon(0.23, orders=(1,))
    step = hm.sample_to_step(w, 7)
    fast = hm.l1_level_distance(step, w, 1, nodes_per_axis=12)
    n, q = 7, 12
    nodes = ((np.arange(n)[:, None] + (np.arange(q) + 0.5)[None, :] / q) / n).reshape(-1)
    grid = np.stack(np.meshgrid(nodes, nodes, indexing="ij"), axis=-1)
    vals = w.evaluate(1, grid)
    cell = np.repeat(np.repeat(step.level(1), q, 0), q, 1)
    brute = float(np.abs(vals - cell).mean())
    assert fast == pytest.approx(brute, abs=1e-12)


# ---------------------------------------------------------------------------
# hypertree observables


def test_hypertree_trivial_cases():
    tree = hm.DirectedHypertree(1, ())
    rho = hm.FiberedDensity.uniform(4, 16, 0.0, 1.0, support=(0.0, 1.0))
    atoms = hm.fibered_atoms_from_density(rho)
    assert hm.hypertree_moment(tree, hm.constant_hypergraphon(1.0), atoms,
                               (0,)) == pytest.approx(1.0)
    # single edge, exponents (0, 1) against w1 == 1: the global first moment
    tree2 = hm.DirectedHypertree(2, (((1), (2,)),))
    w1 = hm.constant_hypergraphon(1.0, orders=(1,))
    val = hm.hypertree_moment(tree2, w1, atoms, (0, 1))
    assert val == pytest.approx(0.5, abs=1e-12)


def test_hypertree_matches_double_sum(rng):
    # two-edge tree 1 -> {2,3}, 2 -> {4}: brute-force the label sums on an
    # 8-cell grid with monomial fiber moments
    n = 8
    centers = (np.arange(n) + 0.5) / n
    atoms = hm.FiberedAtoms([hm.DiscreteMeasure([float(c)], [1.0]) for c in centers])
    w = hm.balanced_hypergraphon(orders=(1, 2))
    tree = hm.DirectedHypertree(4, ((1, (2, 3)), (2, (4,))))
    exps = (1, 0, 2, 1)
    got = hm.hypertree_moment(tree, w, atoms, exps)
    total = 0.0
    for i1 in range(n):
        for i2 in range(n):
            for i3 in range(n):
                for i4 in range(n):
                    pts2 = np.array([centers[i1], centers[i2], centers[i3]])
                    pts1 = np.array([centers[i2], centers[i4]])
                    total += (float(w.evaluate(2, pts2)) * float(w.evaluate(1, pts1))
                              * centers[i1] ** exps[0] * centers[i3] ** exps[2]
                              * centers[i4] ** exps[3])
    total /= float(n) ** 4
    assert got == pytest.approx(total, abs=1e-10)


def test_hypertree_rejects_malformed():
    with pytest.raises(ParameterError):
        hm.DirectedHypertree(3, ((1, (2,)),))  # node 3 never attached
    with pytest.raises(ParameterError):
        hm.DirectedHypertree(3, ((2, (3,)), (1, (2,))))  # tail not yet reachable
