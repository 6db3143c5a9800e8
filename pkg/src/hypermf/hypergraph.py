"""Finite weighted hypergraphs with per-order adjacency tensors.

A hypergraph on N nodes stores one adjacency tensor per interaction order
l >= 1; the order-l tensor assigns a weight to ordered multi-indices
(i, j_1, ..., j_l) with pairwise-distinct entries (no loops).  Head symmetry
(invariance under permuting j_1..j_l) is built into the storage: one row per
(tail, head-multiset).  Fully symmetric tensors (invariant under permuting all
l+1 indices) store one fully sorted row per hyperedge.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ._util import float_repr, pack_rows
from .errors import ParameterError, ParseError, ResourceLimitError

BUILD_BUDGET = 50_000_000  # max stored rows across one build call


def _as_rows(indices, order):
    rows = np.asarray(indices, dtype=np.int64)
    if rows.ndim != 2 or rows.shape[1] != order + 1:
        raise ParameterError(f"index rows must have shape (E, {order + 1})")
    return rows


class AdjacencyTensor:
    """Sparse order-l adjacency tensor.

    Rows of `indices` are 1-based multi-indices (tail, heads...).  When
    `canonical` is true, rows are unique representatives: fully sorted when
    `fully_symmetric`, else tail followed by sorted heads.  Weight lookup for
    an arbitrary ordered multi-index canonicalizes first, so head symmetry
    (and full symmetry, when flagged) is automatic.
    """

    def __init__(self, order, num_nodes, indices, weights, fully_symmetric=False,
                 canonical=True):
        if order < 1:
            raise ParameterError(f"order must be >= 1, got {order}")
        self.order = int(order)
        self.num_nodes = int(num_nodes)
        self.indices = _as_rows(indices, order)
        self.weights = np.asarray(weights, dtype=np.float64)
        if self.weights.shape != (self.indices.shape[0],):
            raise ParameterError("weights must be one value per index row")
        if self.indices.size and (self.indices.min() < 1 or self.indices.max() > num_nodes):
            raise ParameterError("indices must lie in 1..num_nodes")
        self.fully_symmetric = bool(fully_symmetric)
        self.canonical = bool(canonical)
        self._lookup = None

    @property
    def num_entries(self):
        return self.indices.shape[0]

    def max_weight(self):
        return float(self.weights.max()) if self.num_entries else 0.0

    def canonical_key_rows(self):
        """Canonical representative of every stored row."""
        rows = self.indices
        if self.fully_symmetric:
            return np.sort(rows, axis=1)
        heads = np.sort(rows[:, 1:], axis=1)
        return np.concatenate([rows[:, :1], heads], axis=1)

    def _ensure_lookup(self):
        if self._lookup is None:
            keys = pack_rows(self.canonical_key_rows(), self.num_nodes + 1)
            # first occurrence wins on duplicates; validate() reports conflicts
            self._lookup = {}
            for k, w in zip(keys.tolist(), self.weights.tolist()):
                self._lookup.setdefault(k, w)
        return self._lookup

    def weight(self, tail, heads):
        """Weight of the ordered multi-index (tail, heads...)."""
        idx = (int(tail), *map(int, heads))
        if len(idx) != self.order + 1:
            raise ParameterError(f"expected {self.order} head indices")
        if len(set(idx)) != len(idx):
            return 0.0  # loops carry no weight
        if self.fully_symmetric:
            key_row = sorted(idx)
        else:
            key_row = [idx[0], *sorted(idx[1:])]
        key = pack_rows(np.array([key_row]), self.num_nodes + 1)[0]
        return self._ensure_lookup().get(int(key), 0.0)


class Hypergraph:
    """Node set plus one adjacency tensor per stored order."""

    def __init__(self, num_nodes, max_rank, tensors=None):
        if num_nodes < 1:
            raise ParameterError("num_nodes must be positive")
        if max_rank < 2:
            raise ParameterError("max_rank must be >= 2")
        self.num_nodes = int(num_nodes)
        self.max_rank = int(max_rank)
        self.tensors = dict(tensors or {})
        for order, t in self.tensors.items():
            if t.order != order or t.num_nodes != num_nodes:
                raise ParameterError("tensor order/num_nodes mismatch")
            if order + 1 > max_rank:
                raise ParameterError(f"tensor of order {order} exceeds max_rank {max_rank}")

    @property
    def orders(self):
        return tuple(sorted(self.tensors))

    @property
    def fully_symmetric(self):
        return all(t.fully_symmetric for t in self.tensors.values()) if self.tensors else True

    def tensor(self, order):
        return self.tensors.get(order)

    def rank(self):
        """Cardinality of the largest hyperedge with nonzero weight."""
        active = [o + 1 for o, t in self.tensors.items()
                  if t.num_entries and np.any(t.weights != 0.0)]
        return max(active) if active else 0

    @staticmethod
    def from_entries(num_nodes, max_rank, entries, fully_symmetric=False, canonical=False):
        """Build from explicit ordered entries {order: [(multi_index, weight), ...]}."""
        tensors = {}
        for order, pairs in entries.items():
            if not pairs:
                idx = np.zeros((0, order + 1), dtype=np.int64)
                wts = np.zeros(0)
            else:
                idx = np.array([p[0] for p in pairs], dtype=np.int64)
                wts = np.array([p[1] for p in pairs], dtype=np.float64)
            tensors[order] = AdjacencyTensor(order, num_nodes, idx, wts,
                                             fully_symmetric=fully_symmetric,
                                             canonical=canonical)
        return Hypergraph(num_nodes, max_rank, tensors)


def _homogeneous_window(num_nodes, theta):
    # integer diameter threshold; the slack absorbs float noise in theta*N
    return int(math.floor(theta * num_nodes + 1e-12))


def _sorted_tuples_within(num_nodes, order, window):
    """All strictly increasing (order+1)-tuples with max - min <= window."""
    est = sum(math.comb(min(window, num_nodes - a), order) for a in range(1, num_nodes + 1))
    if est > BUILD_BUDGET:
        raise ResourceLimitError(
            f"homogeneous build would store {est} rows (budget {BUILD_BUDGET})")
    if order == 1:
        blocks = []
        for g in range(1, min(window, num_nodes - 1) + 1):
            a = np.arange(1, num_nodes - g + 1, dtype=np.int64)
            blocks.append(np.stack([a, a + g], axis=1))
        if not blocks:
            return np.zeros((0, 2), dtype=np.int64)
        return np.concatenate(blocks, axis=0)
    if order == 2:
        blocks = []
        for a in range(1, num_nodes + 1):
            hi = min(a + window, num_nodes)
            m = hi - a  # candidates a+1..hi
            if m < 2:
                continue
            r, c = np.triu_indices(m, k=1)
            blocks.append(np.stack([np.full(r.size, a, dtype=np.int64),
                                    a + 1 + r.astype(np.int64),
                                    a + 1 + c.astype(np.int64)], axis=1))
        if not blocks:
            return np.zeros((0, 3), dtype=np.int64)
        return np.concatenate(blocks, axis=0)
    rows = []
    for a in range(1, num_nodes + 1):
        hi = min(a + window, num_nodes)
        for combo in itertools.combinations(range(a + 1, hi + 1), order):
            rows.append((a, *combo))
    return np.array(rows, dtype=np.int64).reshape(-1, order + 1)


def build_homogeneous(num_nodes, theta, max_rank, orders=None):
    """Homogeneous family: weight N^-l iff the index diameter is <= theta*N.

    All multi-indices with pairwise-distinct entries whose max-min gap does not
    exceed theta*N receive weight 1/N^l; everything else (including loops) is
    zero.  theta = 1 gives the all-to-all hypergraph.
    """
    if not (0.0 < theta <= 1.0):
        raise ParameterError(f"theta must lie in (0, 1], got {theta}")
    if num_nodes < 2:
        raise ParameterError("need at least 2 nodes")
    window = _homogeneous_window(num_nodes, theta)
    orders = tuple(orders) if orders is not None else tuple(range(1, max_rank))
    tensors = {}
    for order in orders:
        if order + 1 > max_rank:
            raise ParameterError(f"order {order} exceeds max_rank {max_rank}")
        rows = _sorted_tuples_within(num_nodes, order, window)
        w = np.full(rows.shape[0], num_nodes ** (-float(order)))
        tensors[order] = AdjacencyTensor(order, num_nodes, rows, w, fully_symmetric=True)
    return Hypergraph(num_nodes, max_rank, tensors)


def _all_sorted_tuples(num_nodes, order):
    return _sorted_tuples_within(num_nodes, order, num_nodes)


def quadratic_profile(x):
    """Decreasing bump profile f(x) = 4 (x - 1/2)^2 on [0, 1/2]."""
    x = np.asarray(x, dtype=np.float64)
    return 4.0 * (x - 0.5) ** 2


def build_balanced(num_nodes, f=quadratic_profile, max_rank=3, orders=None):
    """Balanced family: weight N^-l * f(|mean(index)/N - (N+1)/(2N)|).

    f is a nonnegative profile on [0, 1/2] applied to the deviation of the
    multi-index mean from the central label.  Multi-indices with repeated
    entries are zeroed (no loops).  Entries where f vanishes are dropped.
    """
    if num_nodes < 2:
        raise ParameterError("need at least 2 nodes")
    orders = tuple(orders) if orders is not None else tuple(range(1, max_rank))
    tensors = {}
    for order in orders:
        if order + 1 > max_rank:
            raise ParameterError(f"order {order} exceeds max_rank {max_rank}")
        rows = _all_sorted_tuples(num_nodes, order)
        mean = rows.mean(axis=1)
        vals = np.asarray(f(np.abs(mean - (num_nodes + 1) / 2.0) / num_nodes), dtype=np.float64)
        if np.any(vals < 0):
            raise ParameterError("profile f must be nonnegative")
        w = vals * num_nodes ** (-float(order))
        keep = w != 0.0
        tensors[order] = AdjacencyTensor(order, num_nodes, rows[keep], w[keep],
                                         fully_symmetric=True)
    return Hypergraph(num_nodes, max_rank, tensors)


def build_clique_lift(adjacency, max_rank):
    """Lift a simple graph to hyperedges over its cliques.

    A sorted multi-index of cardinality l+1 <= max_rank receives weight N^-l
    iff every pair inside it is an edge of the given 0/1 symmetric adjacency
    matrix.  The result is downward closed (simplicial): any sub-multi-index of
    a stored hyperedge is itself stored at its own order.
    """
    adj = np.asarray(adjacency)
    n = adj.shape[0]
    if adj.shape != (n, n):
        raise ParameterError("adjacency must be square")
    if not np.array_equal(adj, adj.T):
        raise ParameterError("adjacency must be symmetric")
    if not np.isin(adj, (0, 1)).all():
        raise ParameterError("adjacency must be 0/1")
    if np.any(np.diag(adj) != 0):
        raise ParameterError("adjacency must have zero diagonal")

    # grow cliques one vertex at a time, keeping sorted vertex tuples
    cliques = {1: [(v,) for v in range(1, n + 1)]}
    for size in range(2, max_rank + 1):
        prev = cliques[size - 1]
        grown = []
        for c in prev:
            last = c[-1]
            for v in range(last + 1, n + 1):
                if all(adj[u - 1, v - 1] for u in c):
                    grown.append((*c, v))
        cliques[size] = grown
        if len(grown) > BUILD_BUDGET:
            raise ResourceLimitError("clique enumeration exceeds budget")

    tensors = {}
    for order in range(1, max_rank):
        rows = np.array(cliques[order + 1], dtype=np.int64).reshape(-1, order + 1)
        w = np.full(rows.shape[0], float(n) ** (-order))
        tensors[order] = AdjacencyTensor(order, n, rows, w, fully_symmetric=True)
    return Hypergraph(n, max_rank, tensors)


def scaling_bound(hypergraph):
    """Smallest W with N^l * w <= W over all stored entries (0 when empty)."""
    best = 0.0
    n = hypergraph.num_nodes
    for order, t in hypergraph.tensors.items():
        if t.num_entries:
            best = max(best, float(n) ** order * t.max_weight())
    return best


@dataclass
class ValidationReport:
    """Violations found by validate_hypergraph; empty lists mean a clean object."""

    loop_violations: list = field(default_factory=list)
    head_symmetry_violations: list = field(default_factory=list)
    full_symmetry_violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not (self.loop_violations or self.head_symmetry_violations
                    or self.full_symmetry_violations)

    def summary(self):
        return (f"loops={len(self.loop_violations)} "
                f"head_symmetry={len(self.head_symmetry_violations)} "
                f"full_symmetry={len(self.full_symmetry_violations)}")


def validate_hypergraph(hypergraph):
    """Check no-loops plus head/full symmetry over all stored entries.

    Report-only: the hypergraph is not mutated.  Head symmetry compares stored
    weights across rows sharing (tail, head-multiset); full symmetry compares
    across rows sharing the full index multiset (only meaningful to flag when
    the tensor claims full symmetry or stores multiple tails per hyperedge).
    """
    report = ValidationReport()
    for order, t in sorted(hypergraph.tensors.items()):
        rows, wts = t.indices, t.weights
        for r, w in zip(rows.tolist(), wts.tolist()):
            if len(set(r)) != len(r) and w != 0.0:
                report.loop_violations.append((order, tuple(r), w))
        head_groups = {}
        for r, w in zip(rows.tolist(), wts.tolist()):
            key = (r[0], tuple(sorted(r[1:])))
            head_groups.setdefault(key, []).append(w)
        for key, ws in head_groups.items():
            if max(ws) - min(ws) > 0.0:
                report.head_symmetry_violations.append((order, key, tuple(ws)))
        full_groups = {}
        for (tail, heads), ws in head_groups.items():
            fkey = tuple(sorted((tail, *heads)))
            full_groups.setdefault(fkey, []).extend(ws)
        if t.fully_symmetric:
            for fkey, ws in full_groups.items():
                if max(ws) - min(ws) > 0.0:
                    report.full_symmetry_violations.append((order, fkey, tuple(ws)))
    return report


FORMAT_HEADER = "hypergraph v1"


def save_hypergraph(hypergraph, path):
    """Write the plain-text edge-list format (round-trips bitwise)."""
    lines = [f"{FORMAT_HEADER} N={hypergraph.num_nodes} max_rank={hypergraph.max_rank} "
             f"symmetric={1 if hypergraph.fully_symmetric else 0}"]
    for order in sorted(hypergraph.tensors):
        t = hypergraph.tensors[order]
        for row, w in zip(t.indices.tolist(), t.weights.tolist()):
            lines.append(f"{order} " + " ".join(str(i) for i in row) + f" {float_repr(w)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_hypergraph(path):
    with open(path) as fh:
        raw_lines = fh.read().splitlines()
    header = None
    entries = {}
    num_nodes = max_rank = symmetric = None
    for lineno, line in enumerate(raw_lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if header is None:
            if not stripped.startswith(FORMAT_HEADER):
                raise ParseError(f"expected '{FORMAT_HEADER} ...' header", lineno)
            header = stripped
            try:
                fields = dict(tok.split("=", 1) for tok in stripped.split()[2:])
                num_nodes = int(fields["N"])
                max_rank = int(fields["max_rank"])
                symmetric = int(fields["symmetric"])
            except (KeyError, ValueError) as exc:
                raise ParseError(f"malformed header: {exc}", lineno) from None
            if symmetric not in (0, 1):
                raise ParseError("symmetric flag must be 0 or 1", lineno)
            continue
        toks = stripped.split()
        try:
            order = int(toks[0])
            idx = tuple(int(x) for x in toks[1:-1])
            weight = float(toks[-1])
        except (ValueError, IndexError):
            raise ParseError(f"malformed entry line: {stripped!r}", lineno) from None
        if order < 1 or order + 1 > max_rank:
            raise ParseError(f"order {order} outside 1..{max_rank - 1}", lineno)
        if len(idx) != order + 1:
            raise ParseError(f"expected {order + 1} indices for order {order}, "
                             f"got {len(idx)}", lineno)
        if any(i < 1 or i > num_nodes for i in idx):
            raise ParseError(f"index outside 1..{num_nodes}", lineno)
        if len(set(idx)) != len(idx):
            raise ParseError(f"loop entry (repeated index) not allowed: {idx}", lineno)
        if weight < 0 or not math.isfinite(weight):
            raise ParseError(f"weight must be finite and nonnegative, got {weight}", lineno)
        entries.setdefault(order, []).append((idx, weight))
    if header is None:
        raise ParseError("empty file: missing header", 1)
    return Hypergraph.from_entries(num_nodes, max_rank, entries,
                                   fully_symmetric=bool(symmetric), canonical=True)
