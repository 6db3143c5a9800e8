"""Hypergraphons: measurable limit objects of dense weighted hypergraphs.

A hypergraphon of unbounded rank is a family of bounded symmetric level
functions w_l : [0,1]^(l+1) -> [0, W], one per active order l.  Two concrete
representations are provided: step functions on a uniform partition of [0,1]
(the embedding of finite hypergraphs) and analytic levels given by callables.
Label cells are right-open, I_i = [(i-1)/N, i/N), with the last cell closed.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ._util import float_repr
from .errors import ParameterError, ParseError, ResourceLimitError
from .hypergraph import AdjacencyTensor, Hypergraph, quadratic_profile

DENSE_BUDGET = 1 << 27  # max entries for one dense level array


class Hypergraphon:
    """Common interface of step and analytic hypergraphons."""

    kind = "abstract"

    @property
    def active_orders(self):
        return tuple(sorted(self.levels))

    def sup_bound(self, order=None):
        if order is not None:
            return self._sup_of(order) if order in self.levels else 0.0
        return max((self._sup_of(o) for o in self.levels), default=0.0)

    def evaluate(self, order, points):
        """Evaluate level `order` at points of shape (..., order+1) in [0,1].

        Orders that are not active evaluate to zero.
        """
        pts = np.asarray(points, dtype=np.float64)
        if pts.shape[-1] != order + 1:
            raise ParameterError(f"points must have {order + 1} trailing coordinates")
        if pts.size and (pts.min() < 0.0 or pts.max() > 1.0):
            raise ParameterError("points must lie in [0, 1]")
        if order not in self.levels:
            return np.zeros(pts.shape[:-1])
        return self._evaluate(order, pts)


class StepHypergraphon(Hypergraphon):
    """Piecewise-constant hypergraphon on a uniform partition into `parts` cells."""

    kind = "step"

    def __init__(self, parts, levels):
        if parts < 1:
            raise ParameterError("parts must be positive")
        self.parts = int(parts)
        self.levels = {}
        for order, arr in levels.items():
            arr = np.asarray(arr, dtype=np.float64)
            if arr.shape != (parts,) * (order + 1):
                raise ParameterError(f"level {order} must have shape {(parts,) * (order + 1)}")
            self.levels[int(order)] = arr

    def level(self, order):
        return self.levels[order]

    def _sup_of(self, order):
        arr = self.levels[order]
        return float(np.abs(arr).max()) if arr.size else 0.0

    def cell_index(self, xi):
        xi = np.asarray(xi, dtype=np.float64)
        return np.minimum((xi * self.parts).astype(np.int64), self.parts - 1)

    def _evaluate(self, order, pts):
        idx = self.cell_index(pts)
        return self.levels[order][tuple(np.moveaxis(idx, -1, 0))]


@dataclass
class AnalyticLevel:
    """One analytic level: callable on (..., order+1) stacked coordinates."""

    fn: callable
    sup: float = 1.0
    lipschitz: float | None = None  # w.r.t. the Euclidean norm on [0,1]^(l+1)
    diameter_threshold: float | None = None  # set for diameter-band indicators
    label: str = "analytic"


class AnalyticHypergraphon(Hypergraphon):
    kind = "analytic"

    def __init__(self, levels):
        self.levels = {int(o): lv for o, lv in levels.items()}

    def level(self, order):
        return self.levels[order]

    def _sup_of(self, order):
        return float(self.levels[order].sup)

    def _evaluate(self, order, pts):
        return np.asarray(self.levels[order].fn(pts), dtype=np.float64)


def homogeneous_hypergraphon(theta, orders=(1, 2)):
    """Diameter-band indicator levels: w_l = 1 iff max_i,j |xi_i - xi_j| <= theta."""
    if not (0.0 < theta <= 1.0):
        raise ParameterError(f"theta must lie in (0, 1], got {theta}")

    def make(order):
        def fn(pts):
            diam = pts.max(axis=-1) - pts.min(axis=-1)
            # slack keeps points lying exactly on the closed band's boundary
            # inside it despite float subtraction noise (e.g. 0.4 - 0.3 > 0.1)
            return (diam <= theta + 1e-12).astype(np.float64)

        return AnalyticLevel(fn=fn, sup=1.0, lipschitz=None, diameter_threshold=theta,
                             label=f"homogeneous theta={theta}")

    return AnalyticHypergraphon({o: make(o) for o in orders})


def balanced_hypergraphon(f=quadratic_profile, orders=(1, 2), f_lipschitz=4.0, f_sup=1.0):
    """Mean-deviation levels: w_l = f(|mean(xi) - 1/2|).

    `f_lipschitz` bounds |f'| on [0, 1/2]; the induced Euclidean Lipschitz
    constant of level l is f_lipschitz / sqrt(l+1).
    """

    def make(order):
        def fn(pts):
            return np.asarray(f(np.abs(pts.mean(axis=-1) - 0.5)), dtype=np.float64)

        lip = f_lipschitz / math.sqrt(order + 1) if f_lipschitz is not None else None
        return AnalyticLevel(fn=fn, sup=float(f_sup), lipschitz=lip,
                             label="balanced")

    return AnalyticHypergraphon({o: make(o) for o in orders})


def constant_hypergraphon(value=1.0, orders=(1,)):
    """Constant levels (value 1 at order 1 is the all-to-all binary limit)."""
    if value < 0:
        raise ParameterError("level value must be nonnegative")

    def make(order):
        def fn(pts):
            return np.full(pts.shape[:-1], float(value))

        return AnalyticLevel(fn=fn, sup=float(value), lipschitz=0.0, label=f"constant {value}")

    return AnalyticHypergraphon({o: make(o) for o in orders})


def _check_dense_budget(parts, order):
    if parts ** (order + 1) > DENSE_BUDGET:
        raise ResourceLimitError(
            f"dense level of order {order} with {parts} parts needs "
            f"{parts ** (order + 1)} entries (budget {DENSE_BUDGET})")


def step_from_hypergraph(hypergraph):
    """Embed a finite hypergraph as a step hypergraphon: cell value N^l * w."""
    n = hypergraph.num_nodes
    levels = {}
    for order, t in sorted(hypergraph.tensors.items()):
        _check_dense_budget(n, order)
        arr = np.zeros((n,) * (order + 1))
        if t.num_entries:
            rows = t.indices - 1
            vals = float(n) ** order * t.weights
            cols = range(order + 1)
            if t.fully_symmetric:
                perms = itertools.permutations(cols)
            else:
                perms = ((0, *p) for p in itertools.permutations(range(1, order + 1)))
            for perm in perms:
                arr[tuple(rows[:, c] for c in perm)] = vals
        levels[order] = arr
    return StepHypergraphon(n, levels)


def _all_sorted_rows(num_nodes, order):
    count = math.comb(num_nodes, order + 1)
    if count > DENSE_BUDGET:
        raise ResourceLimitError("discretization would enumerate too many cells")
    combos = itertools.combinations(range(1, num_nodes + 1), order + 1)
    return np.fromiter(itertools.chain.from_iterable(combos), dtype=np.int64,
                       count=count * (order + 1)).reshape(-1, order + 1)


def discretize_pointwise(w, num_nodes, grid_offset=0.0, orders=None, max_rank=None):
    """Sample a hypergraphon on the label grid: weight N^-l * w_l(xi_bar).

    xi_bar_k = (k - 1 + grid_offset)/N.  Multi-indices with repeated entries
    are zeroed (loop-free hypergraph).  grid_offset = 0 samples cell left
    edges (the step-embedding inverse off loop cells); 1/2 samples midpoints.
    """
    if num_nodes < 2:
        raise ParameterError("need at least 2 nodes for a loop-free discretization")
    if not (0.0 <= grid_offset < 1.0):
        raise ParameterError(f"grid_offset must lie in [0, 1), got {grid_offset}")
    orders = tuple(orders) if orders is not None else w.active_orders
    max_rank = max_rank if max_rank is not None else max(orders) + 1
    tensors = {}
    for order in orders:
        rows = _all_sorted_rows(num_nodes, order)
        pts = (rows - 1 + grid_offset) / num_nodes
        vals = w.evaluate(order, pts)
        weights = vals * float(num_nodes) ** (-order)
        keep = weights != 0.0
        tensors[order] = AdjacencyTensor(order, num_nodes, rows[keep], weights[keep],
                                         fully_symmetric=True)
    return Hypergraph(num_nodes, max_rank, tensors)


def discretize_l1(w, num_nodes, nodes_per_axis=8, orders=None, max_rank=None):
    """Cell-average discretization: weight N * integral of w_l over the cell.

    The cell integral is approximated by a tensor midpoint rule with
    `nodes_per_axis` points per axis.
    """
    if num_nodes < 1:
        raise ParameterError("need at least 1 node")
    if nodes_per_axis < 1:
        raise ParameterError("nodes_per_axis must be >= 1")
    orders = tuple(orders) if orders is not None else w.active_orders
    max_rank = max_rank if max_rank is not None else max(orders) + 1
    q = int(nodes_per_axis)
    tensors = {}
    for order, offsets in ((o, _midpoint_offsets(q, o + 1)) for o in orders):
        rows = _all_sorted_rows(num_nodes, order)
        if rows.shape[0] * offsets.shape[0] > DENSE_BUDGET:
            raise ResourceLimitError("cell quadrature exceeds budget")
        # nodes: cell corner + per-axis midpoint offsets, all cells at once
        pts = ((rows - 1)[:, None, :] + offsets[None, :, :]) / num_nodes
        vals = w.evaluate(order, pts).mean(axis=1)
        weights = vals * float(num_nodes) ** (-order)
        keep = weights != 0.0
        tensors[order] = AdjacencyTensor(order, num_nodes, rows[keep], weights[keep],
                                         fully_symmetric=True)
    return Hypergraph(num_nodes, max_rank, tensors)


def _midpoint_offsets(q, dims):
    """Midpoint subgrid of the unit cell [0,1)^dims, shape (q^dims, dims)."""
    axis = (np.arange(q) + 0.5) / q
    grids = np.meshgrid(*([axis] * dims), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


def sample_to_step(w, parts, mode="midpoint", nodes_per_axis=8):
    """Project an analytic hypergraphon onto a step function with `parts` cells."""
    if mode not in ("midpoint", "average"):
        raise ParameterError("mode must be 'midpoint' or 'average'")
    levels = {}
    for order in w.active_orders:
        _check_dense_budget(parts, order)
        dims = order + 1
        if mode == "midpoint":
            axis = (np.arange(parts) + 0.5) / parts
            grids = np.meshgrid(*([axis] * dims), indexing="ij")
            pts = np.stack(grids, axis=-1)
            levels[order] = w.evaluate(order, pts)
        else:
            offsets = _midpoint_offsets(nodes_per_axis, dims)
            corners = np.stack(np.meshgrid(*([np.arange(parts)] * dims), indexing="ij"),
                               axis=-1).reshape(-1, dims)
            if corners.shape[0] * offsets.shape[0] > DENSE_BUDGET:
                raise ResourceLimitError("cell-average sampling exceeds budget")
            pts = (corners[:, None, :] + offsets[None, :, :]) / parts
            levels[order] = w.evaluate(order, pts).mean(axis=1).reshape((parts,) * dims)
    return StepHypergraphon(parts, levels)


STEP_FORMAT_HEADER = "hypergraphon v1"


def save_step_hypergraphon(w, path):
    """Write a step hypergraphon: header plus row-major level blocks."""
    if w.kind != "step":
        raise ParameterError("only step hypergraphons have a file representation")
    orders = ",".join(str(o) for o in w.active_orders)
    lines = [f"{STEP_FORMAT_HEADER} parts={w.parts} orders={orders}"]
    for order in w.active_orders:
        lines.append(f"order {order}")
        flat = w.levels[order].reshape(-1, w.parts)
        for row in flat:
            lines.append(" ".join(float_repr(v) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_step_hypergraphon(path):
    with open(path) as fh:
        raw = [ln for ln in fh.read().splitlines()]
    lines = [(no, ln.strip()) for no, ln in enumerate(raw, start=1)
             if ln.strip() and not ln.strip().startswith("#")]
    if not lines:
        raise ParseError("empty file: missing header", 1)
    no, header = lines[0]
    if not header.startswith(STEP_FORMAT_HEADER):
        raise ParseError(f"expected '{STEP_FORMAT_HEADER} ...' header", no)
    try:
        fields = dict(tok.split("=", 1) for tok in header.split()[2:])
        parts = int(fields["parts"])
        orders = [int(x) for x in fields["orders"].split(",") if x]
    except (KeyError, ValueError) as exc:
        raise ParseError(f"malformed header: {exc}", no) from None
    levels = {}
    pos = 1
    for order in orders:
        if pos >= len(lines) or lines[pos][1] != f"order {order}":
            raise ParseError(f"expected 'order {order}' block",
                             lines[pos][0] if pos < len(lines) else no)
        pos += 1
        rows_needed = parts ** order
        block = []
        for _ in range(rows_needed):
            if pos >= len(lines):
                raise ParseError(f"truncated block for order {order}", lines[-1][0])
            lno, ln = lines[pos]
            vals = ln.split()
            if len(vals) != parts:
                raise ParseError(f"expected {parts} values, got {len(vals)}", lno)
            try:
                block.append([float(v) for v in vals])
            except ValueError:
                raise ParseError(f"malformed value in block: {ln!r}", lno) from None
            pos += 1
        levels[order] = np.array(block).reshape((parts,) * (order + 1))
    return StepHypergraphon(parts, levels)
