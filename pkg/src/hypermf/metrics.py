"""Distances between measures, fibered measures, and hypergraphon levels.

Provides the exact 1-D bounded-Lipschitz (flat) distance via a small linear
program, the fibered distance d_{p,nu} over labeled families, exact and
heuristic cut norms with the operator-norm sandwich, L1 level distances, and
rooted-hypertree moment observables.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .errors import HypermfError, ParameterError, ResourceLimitError

L1_WORK_BUDGET = 400_000_000  # scalar level evaluations per distance call
DENSE_BUDGET = 1 << 27


# ---------------------------------------------------------------------------
# measures


class DiscreteMeasure:
    """Finitely supported nonnegative measure on the real line."""

    def __init__(self, positions, masses):
        self.positions = np.asarray(positions, dtype=np.float64).ravel()
        self.masses = np.asarray(masses, dtype=np.float64).ravel()
        if self.positions.shape != self.masses.shape:
            raise ParameterError("positions and masses must have equal length")
        if self.positions.size == 0:
            raise ParameterError("measure must have at least one atom")
        if not np.all(np.isfinite(self.positions)) or not np.all(np.isfinite(self.masses)):
            raise ParameterError("positions and masses must be finite")
        if np.any(self.masses < 0):
            raise ParameterError("masses must be nonnegative")

    @property
    def total_mass(self):
        return float(self.masses.sum())

    def is_probability(self, tol=1e-10):
        return abs(self.total_mass - 1.0) <= tol

    @staticmethod
    def dirac(x):
        return DiscreteMeasure([x], [1.0])


class FiberedAtoms:
    """One discrete measure per cell of a uniform label grid on [0,1]."""

    def __init__(self, fibers):
        self.fibers = list(fibers)
        if not self.fibers:
            raise ParameterError("need at least one fiber")
        for f in self.fibers:
            if not isinstance(f, DiscreteMeasure):
                raise ParameterError("fibers must be DiscreteMeasure objects")

    @property
    def n_fibers(self):
        return len(self.fibers)

    def fiber(self, k):
        return self.fibers[k]


def _is_density(obj):
    return hasattr(obj, "rho") and hasattr(obj, "x_centers") and hasattr(obj, "n_fibers")


def fibered_atoms_from_density(density):
    """Cell-center atom representation of a gridded fibered density."""
    rho = np.asarray(density.rho, dtype=np.float64)
    xc = np.asarray(density.x_centers, dtype=np.float64)
    dx = float(density.dx)
    fibers = []
    for k in range(rho.shape[0]):
        mass = rho[k] * dx
        keep = mass > 0.0
        if not keep.any():
            raise ParameterError(f"fiber {k} carries no mass")
        fibers.append(DiscreteMeasure(xc[keep], mass[keep]))
    return FiberedAtoms(fibers)


def _as_fibered_atoms(obj):
    if isinstance(obj, FiberedAtoms):
        return obj
    if _is_density(obj):
        return fibered_atoms_from_density(obj)
    raise ParameterError(f"expected fibered atoms or fibered density, got {type(obj)!r}")


# ---------------------------------------------------------------------------
# bounded-Lipschitz distance


def d_bl(mu, nu):
    """Exact flat (bounded-Lipschitz) distance between two discrete measures.

    Solves  max  sum_k c_k phi_k  over |phi| <= 1 and |phi_{k+1} - phi_k| <=
    a_{k+1} - a_k on the sorted merged support (c = signed mass difference).
    Adjacent increment constraints imply all pairwise Lipschitz constraints by
    telescoping, and any feasible vector extends piecewise-linearly to a
    1-Lipschitz function bounded by 1 on the line, so the program is exact.
    """
    if not isinstance(mu, DiscreteMeasure) or not isinstance(nu, DiscreteMeasure):
        raise ParameterError("d_bl expects DiscreteMeasure arguments")
    pos = np.concatenate([mu.positions, nu.positions])
    sgn = np.concatenate([mu.masses, -nu.masses])
    support, inverse = np.unique(pos, return_inverse=True)
    c = np.zeros(support.size)
    np.add.at(c, inverse, sgn)
    m = support.size
    if m == 1:
        return float(abs(c[0]))
    gaps = np.diff(support)
    rows = np.arange(m - 1)
    data = np.concatenate([np.ones(m - 1), -np.ones(m - 1)])
    cols = np.concatenate([rows + 1, rows])
    inc = sp.csr_matrix((data, (np.concatenate([rows, rows]), cols)), shape=(m - 1, m))
    a_ub = sp.vstack([inc, -inc], format="csr")
    b_ub = np.concatenate([gaps, gaps])
    res = linprog(-c, A_ub=a_ub, b_ub=b_ub, bounds=(-1.0, 1.0), method="highs")
    if not res.success:
        raise HypermfError(f"flat-distance LP failed: {res.message}")
    return float(max(-res.fun, 0.0))


# ---------------------------------------------------------------------------
# fibered distance


def d_p_nu(mu, nu, p=1.0):
    """Fibered distance: ( integral over xi of d_bl(mu^xi, nu^xi)^p )^(1/p).

    Both arguments are fibered families on uniform label grids (atoms or
    gridded densities; densities are converted to cell-center atoms).  The
    label integral is evaluated exactly for step families by summing over the
    overlay of the two grids; for matching grids this is the midpoint sum.
    """
    if p < 1:
        raise ParameterError(f"p must satisfy p >= 1, got {p}")
    fa = _as_fibered_atoms(mu)
    fb = _as_fibered_atoms(nu)
    na, nb = fa.n_fibers, fb.n_fibers
    cuts = np.union1d(np.arange(na + 1) / na, np.arange(nb + 1) / nb)
    total = 0.0
    cache = {}
    for left, right in zip(cuts[:-1], cuts[1:]):
        midpoint = 0.5 * (left + right)
        i = min(int(midpoint * na), na - 1)
        j = min(int(midpoint * nb), nb - 1)
        if (i, j) not in cache:
            cache[(i, j)] = d_bl(fa.fiber(i), fb.fiber(j))
        total += (right - left) * cache[(i, j)] ** p
    return float(total ** (1.0 / p))


def rebin_fibered_atoms(atoms, n_fibers):
    """Aggregate a fibered atom family onto a coarser/finer uniform label grid.

    Target fiber k receives each source fiber's atoms weighted by
    m * |overlap of the label cells|, i.e. the conditional measure of the
    joint (state, label) measure given the target cell.
    """
    atoms = _as_fibered_atoms(atoms)
    n = atoms.n_fibers
    m = int(n_fibers)
    if m < 1:
        raise ParameterError("n_fibers must be positive")
    fibers = []
    for k in range(m):
        lo, hi = k / m, (k + 1) / m
        pos_parts, mass_parts = [], []
        first = int(math.floor(lo * n))
        last = min(int(math.ceil(hi * n)), n)
        for i in range(first, last):
            overlap = min(hi, (i + 1) / n) - max(lo, i / n)
            if overlap <= 0:
                continue
            f = atoms.fiber(i)
            pos_parts.append(f.positions)
            mass_parts.append(f.masses * (overlap * m))
        fibers.append(DiscreteMeasure(np.concatenate(pos_parts), np.concatenate(mass_parts)))
    return FiberedAtoms(fibers)


# ---------------------------------------------------------------------------
# cut norms


def _check_level_diff(diff):
    arr = np.asarray(diff, dtype=np.float64)
    order = arr.ndim - 1
    if order < 1:
        raise ParameterError("level difference must have at least 2 axes")
    n = arr.shape[0]
    if arr.shape != (n,) * (order + 1):
        raise ParameterError("level difference must be a hypercube array")
    return arr, order, n


def _subset_matrix(n, start, stop):
    cols = np.arange(start, stop, dtype=np.int64)
    return ((cols[None, :] >> np.arange(n, dtype=np.int64)[:, None]) & 1).astype(np.float64)


def _exact_feasible(order, n):
    if order == 1:
        return n <= 20
    if order == 2:
        return n <= 8
    return n * order <= 12


def cut_norm_exact(diff, _mode="cut"):
    """Exact labeled cut norm of a step-level difference.

    Enumerates all head subsets (S_1, ..., S_l); for each, the optimal tail set
    is closed-form: the positive (or negative) part of the contracted row sums.
    Values are normalized by N^(l+1) (cell volume).  Raises a resource error
    when enumeration is infeasible; use cut_norm_heuristic then.
    """
    arr, order, n = _check_level_diff(diff)
    if not _exact_feasible(order, n):
        raise ResourceLimitError(
            f"exact enumeration infeasible for order {order} with {n} parts; "
            "use cut_norm_heuristic for a lower bound")
    norm = float(n) ** (order + 1)
    if order == 1:
        best = 0.0
        chunk = 1 << 13
        for start in range(0, 1 << n, chunk):
            m = _subset_matrix(n, start, min(start + chunk, 1 << n))
            r = arr @ m
            if _mode == "cut":
                vals = np.maximum(np.clip(r, 0, None).sum(axis=0),
                                  np.clip(-r, 0, None).sum(axis=0))
            else:
                vals = np.abs(r).sum(axis=0)
            best = max(best, float(vals.max()))
        return best / norm
    m = _subset_matrix(n, 0, 1 << n)
    t = arr
    for _ in range(order):
        # contract the first head axis against all subsets; head axes stay in front
        t = np.tensordot(t, m, axes=([1], [0]))
    # t has shape (n, 2^n, ..., 2^n); reduce over the tail axis
    if _mode == "cut":
        vals = np.maximum(np.clip(t, 0, None).sum(axis=0), np.clip(-t, 0, None).sum(axis=0))
    else:
        vals = np.abs(t).sum(axis=0)
    return float(vals.max()) / norm


def operator_norm_infty_to_1(diff):
    """Norm of the multilinear adjacency operator against [0,1]-valued tests.

    Equals max over head subsets of the L1 norm of the contracted tail
    function; satisfies cut_norm <= value <= 2^l * cut_norm.
    """
    return cut_norm_exact(diff, _mode="op")


def cut_norm_heuristic(diff, restarts=8, seed=0, max_rounds=200):
    """Coordinate-ascent lower bound for the labeled cut norm.

    Alternately re-optimizes each subset (tail and every head slot) given the
    others; each slot update is closed-form.  Runs `restarts` seeded random
    initializations and returns the best value found (always a valid lower
    bound of the exact cut norm).
    """
    arr, order, n = _check_level_diff(diff)
    norm = float(n) ** (order + 1)
    best = 0.0
    for restart in range(restarts):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=int(seed),
                                                           spawn_key=(restart,)))
        sets = [(rng.random(n) < 0.5).astype(np.float64) for _ in range(order + 1)]
        for sign in (1.0, -1.0):
            current = [s.copy() for s in sets]
            value = sign * _cut_value(arr, current)
            for _ in range(max_rounds):
                improved = False
                for slot in range(order + 1):
                    coeff = _slot_coefficients(arr, current, slot)
                    candidate = (sign * coeff > 0).astype(np.float64)
                    new_value = sign * float(coeff @ candidate)
                    if new_value > value + 1e-15:
                        current[slot] = candidate
                        value = new_value
                        improved = True
                if not improved:
                    break
            best = max(best, value)
    return best / norm


def _cut_value(arr, sets):
    t = arr
    for s in sets[1:]:
        t = np.tensordot(t, s, axes=([1], [0]))
    return float(t @ sets[0])


def _slot_coefficients(arr, sets, slot):
    # move the slot axis first, contract every other slot in order
    t = np.moveaxis(arr, slot, 0)
    for k in range(len(sets)):
        if k == slot:
            continue
        t = np.tensordot(t, sets[k], axes=([1], [0]))
    return t


@dataclass
class CutDistanceResult:
    total: float
    per_order: list = field(default_factory=list)  # (order, value, mode, alpha)

    def modes(self):
        return {order: mode for order, _, mode, _ in self.per_order}


def default_alpha(order):
    """Default positive summable weight sequence 2^-l."""
    return 2.0 ** (-order)


def _common_step_levels(w, wbar):
    if w.kind != "step" or wbar.kind != "step":
        raise ParameterError("cut distances are defined between step hypergraphons")
    n1, n2 = w.parts, wbar.parts
    n = n1 * n2 // math.gcd(n1, n2)
    orders = sorted(set(w.active_orders) | set(wbar.active_orders))
    for order in orders:
        if n ** (order + 1) > DENSE_BUDGET:
            raise ResourceLimitError("common refinement exceeds budget")
    out = []
    for order in orders:
        a = _refine_level(w, order, n)
        b = _refine_level(wbar, order, n)
        out.append((order, a - b))
    return n, out


def _refine_level(w, order, parts):
    if order in w.levels:
        arr = w.levels[order]
    else:
        arr = np.zeros((w.parts,) * (order + 1))
    factor = parts // w.parts
    for axis in range(order + 1):
        arr = np.repeat(arr, factor, axis=axis)
    return arr


def d_square(w, wbar, alpha=None, restarts=8, seed=0):
    """Weighted cut distance sum_l alpha_l * cut_norm_l(w_l - wbar_l).

    Uses the exact enumeration when feasible for an order and falls back to
    the coordinate-ascent heuristic otherwise; the per-order mode is reported
    ('exact' or 'heuristic', the latter a lower bound).
    """
    alpha_fn = alpha if callable(alpha) else (
        (lambda o: alpha[o]) if isinstance(alpha, dict) else default_alpha)
    _, diffs = _common_step_levels(w, wbar)
    per_order = []
    total = 0.0
    for order, diff in diffs:
        n = diff.shape[0]
        if _exact_feasible(order, n):
            value, mode = cut_norm_exact(diff), "exact"
        else:
            value, mode = cut_norm_heuristic(diff, restarts=restarts, seed=seed), "heuristic"
        a = float(alpha_fn(order))
        if a <= 0:
            raise ParameterError("alpha weights must be strictly positive")
        per_order.append((order, value, mode, a))
        total += a * value
    return CutDistanceResult(total=total, per_order=per_order)


@dataclass
class PermCutResult:
    total: float
    permutation: tuple
    result: CutDistanceResult


def delta_square_perm(w, wbar, alpha=None, parts_limit=8):
    """Cut distance minimized over relabelings (block permutations) of wbar.

    Exhaustive factorial search; only offered for at most `parts_limit` (<= 8)
    parts on a common grid.
    """
    if w.kind != "step" or wbar.kind != "step":
        raise ParameterError("delta_square_perm expects step hypergraphons")
    if w.parts != wbar.parts:
        raise ParameterError("delta_square_perm expects a common label grid")
    n = w.parts
    if n > min(parts_limit, 8):
        raise ResourceLimitError(f"factorial search not offered beyond 8 parts (got {n})")
    from .hypergraphon import StepHypergraphon

    best = None
    for perm in itertools.permutations(range(n)):
        levels = {}
        for order, arr in wbar.levels.items():
            levels[order] = arr[np.ix_(*([list(perm)] * (order + 1)))]
        res = d_square(w, StepHypergraphon(n, levels), alpha=alpha)
        if best is None or res.total < best.total:
            best = PermCutResult(total=res.total, permutation=perm, result=res)
    return best


# ---------------------------------------------------------------------------
# L1 distance between levels


def _level_sources(obj, order):
    """(kind, payload) for one level of a step/analytic hypergraphon."""
    if obj.kind == "step":
        if order in obj.levels:
            return "step", obj.levels[order]
        return "step", np.zeros((obj.parts,) * (order + 1))
    if obj.kind == "analytic":
        if order in obj.levels:
            return "analytic", obj.levels[order]
        from .hypergraphon import AnalyticLevel

        return "analytic", AnalyticLevel(fn=lambda pts: np.zeros(pts.shape[:-1]), sup=0.0,
                                         lipschitz=0.0, label="zero")
    raise ParameterError(f"unsupported hypergraphon kind {obj.kind!r}")


def l1_level_distance(w, wbar, order, nodes_per_axis=8):
    """L1([0,1]^(l+1)) distance between one level of two hypergraphons.

    step/step: exact on the common refinement.  step/analytic: midpoint
    quadrature with `nodes_per_axis` nodes per axis inside every step cell;
    for diameter-band indicator levels, cells on which both functions are
    provably constant are summed in closed form (identical to the quadrature
    value there) and only boundary-strip cells are evaluated explicitly.
    """
    ka, pa = _level_sources(w, order)
    kb, pb = _level_sources(wbar, order)
    if ka == "step" and kb == "step":
        n, diffs = _common_step_levels(w, wbar)
        for o, diff in diffs:
            if o == order:
                return float(np.abs(diff).mean())
        return 0.0
    if ka == "analytic" and kb == "analytic":
        raise ParameterError("at least one argument must be a step hypergraphon")
    if ka == "analytic":
        step_obj, step_level, analytic = wbar, pb, pa
        if kb != "step":
            raise ParameterError("unsupported combination")
    else:
        step_obj, step_level, analytic = w, pa, pb
    return _l1_step_vs_analytic(step_obj.parts, step_level, analytic, order, nodes_per_axis)


def _l1_step_vs_analytic(parts, step_level, analytic, order, q):
    n = parts
    dims = order + 1
    theta = analytic.diameter_threshold
    shape = (n,) * dims
    total_cells = n ** dims
    from .hypergraphon import _midpoint_offsets

    offsets = _midpoint_offsets(q, dims)
    nodes_per_cell = offsets.shape[0]

    if theta is None:
        if total_cells * nodes_per_cell > L1_WORK_BUDGET:
            raise ResourceLimitError("level quadrature exceeds work budget")
        return _quadrature_cells(None, n, step_level, analytic, offsets, total_cells, shape)

    # diameter-band indicator: classify cells by integer index gap
    idx = np.indices(shape).reshape(dims, -1).T  # (cells, dims) small ints
    gap = idx.max(axis=1) - idx.min(axis=1)
    always_one = (gap + 1) <= theta * n          # sup of diam over the cell <= theta
    always_zero = (gap - 1) >= theta * n         # inf of diam over the cell >= theta
    boundary = ~(always_one | always_zero)
    flat_step = step_level.reshape(-1)
    total = float(np.abs(1.0 - flat_step[always_one]).sum()
                  + np.abs(flat_step[always_zero]).sum()) / total_cells
    b_cells = np.nonzero(boundary)[0]
    if b_cells.size:
        if b_cells.size * nodes_per_cell > L1_WORK_BUDGET:
            raise ResourceLimitError("boundary-cell quadrature exceeds work budget")
        total += _quadrature_cells(b_cells, n, step_level, analytic, offsets,
                                   total_cells, shape)
    return total


def _quadrature_cells(cells, n, step_level, analytic, offsets, total_cells, shape):
    """Mean absolute analytic-vs-step deviation over the listed cells."""
    flat_step = step_level.reshape(-1)
    nodes_per_cell = offsets.shape[0]
    chunk = max(1, int(4_000_000 // nodes_per_cell))
    if cells is None:
        cells = np.arange(total_cells, dtype=np.int64)
    total = 0.0
    for start in range(0, cells.size, chunk):
        part = cells[start:start + chunk]
        corner = np.stack(np.unravel_index(part, shape), axis=-1).astype(np.float64)
        pts = (corner[:, None, :] + offsets[None, :, :]) / n
        vals = np.asarray(analytic.fn(pts), dtype=np.float64)
        total += float(np.abs(vals - flat_step[part][:, None]).mean(axis=1).sum())
    return total / total_cells


# ---------------------------------------------------------------------------
# hypertree moments


@dataclass(frozen=True)
class DirectedHypertree:
    """Rooted hypertree: each edge (tail; heads) attaches fresh head nodes.

    Node 1 is the root; edge k's tail must already be reachable and its heads
    must be previously unused, so the edge set is acyclic and connected.
    """

    num_nodes: int
    edges: tuple

    def __post_init__(self):
        if self.num_nodes < 1:
            raise ParameterError("hypertree needs at least one node")
        seen = {1}
        for tail, heads in self.edges:
            heads = tuple(heads)
            if tail not in seen:
                raise ParameterError(f"edge tail {tail} not yet attached")
            if len(set(heads)) != len(heads):
                raise ParameterError("edge heads must be distinct")
            for h in heads:
                if h in seen:
                    raise ParameterError(f"head node {h} already used")
                if not (1 <= h <= self.num_nodes):
                    raise ParameterError(f"node {h} outside 1..{self.num_nodes}")
                seen.add(h)
        if seen != set(range(1, self.num_nodes + 1)):
            raise ParameterError("hypertree must reach every node exactly once")


def hypertree_moment(tree, w, mu, exponents):
    """Moment of the hypertree observable against per-node monomials.

    Integrates  prod_edges w_l(xi_tail, xi_heads) * prod_nodes m_{e_i}(xi_i)
    over all labels, where m_e(xi) is the e-th moment of the fiber measure.
    Evaluated by leaf-to-root contraction on the fiber grid of `mu`.
    """
    atoms = _as_fibered_atoms(mu)
    n = atoms.n_fibers
    if len(exponents) != tree.num_nodes:
        raise ParameterError("need one exponent per hypertree node")
    moments = {}
    for node, e in enumerate(exponents, start=1):
        vec = np.array([float((f.masses * f.positions ** e).sum()) if e else f.total_mass
                        for f in atoms.fibers])
        moments[node] = vec

    centers = (np.arange(n) + 0.5) / n
    tensor_cache = {}

    def level_tensor(order):
        if order not in tensor_cache:
            if n ** (order + 1) > DENSE_BUDGET:
                raise ResourceLimitError("hypertree contraction exceeds budget")
            grids = np.meshgrid(*([centers] * (order + 1)), indexing="ij")
            tensor_cache[order] = w.evaluate(order, np.stack(grids, axis=-1))
        return tensor_cache[order]

    values = dict(moments)
    for tail, heads in reversed(tree.edges):
        order = len(heads)
        t = level_tensor(order)
        for h in heads:
            t = np.tensordot(t, values[h], axes=([1], [0])) / n
        values[tail] = values[tail] * t
    return float(values[1].mean())
