"""Interaction kernels K_l(x, x_1, ..., x_l) with declared analytic constants.

Each kernel carries a uniform bound B, a Lipschitz constant L for the
sum-of-increments estimate |K(x, h) - K(y, g)| <= L (|x-y| + sum_k |h_k - g_k|),
a head-symmetry flag, and (optionally) a separable decomposition
K = sum_r a_r(x) * prod_k b_rk(x_k) that enables fast mean-field force
assembly.  The declared constants are valid bounds, not necessarily tight.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class SeparableTerm:
    tail_factor: callable  # a_r(x)
    head_factors: tuple    # (b_r1, ..., b_rl)


@dataclass
class InteractionKernel:
    order: int
    fn: callable            # fn(tail (...,), heads (order, ...)) -> (...,)
    bound: float             # B_l
    lipschitz: float         # L_l
    symmetric_head: bool
    separable: tuple | None = None
    name: str = "kernel"
    box: tuple | None = None  # state box the constants were declared on

    def __post_init__(self):
        if self.order < 1:
            raise ParameterError("kernel order must be >= 1")
        if self.separable is not None and any(
                len(t.head_factors) != self.order for t in self.separable):
            raise ParameterError("separable terms must have one factor per head")

    def __call__(self, tail, heads):
        tail = np.asarray(tail, dtype=np.float64)
        heads = np.asarray(heads, dtype=np.float64)
        if heads.shape[0] != self.order:
            raise ParameterError(f"heads must have leading dimension {self.order}")
        return np.asarray(self.fn(tail, heads), dtype=np.float64)

    def separable_eval(self, tail, heads):
        """Evaluate through the separable decomposition (for cross-checking)."""
        if self.separable is None:
            raise ParameterError(f"kernel {self.name} declares no separable form")
        tail = np.asarray(tail, dtype=np.float64)
        heads = np.asarray(heads, dtype=np.float64)
        total = np.zeros(np.broadcast(tail, heads[0]).shape)
        for term in self.separable:
            part = np.asarray(term.tail_factor(tail), dtype=np.float64)
            part = part * np.ones_like(total)
            for k, b in enumerate(term.head_factors):
                part = part * np.asarray(b(heads[k]), dtype=np.float64)
            total = total + part
        return total


class KernelFamily:
    """Kernels with pairwise-distinct orders."""

    def __init__(self, kernels):
        self.kernels = {}
        for k in kernels:
            if k.order in self.kernels:
                raise ParameterError(f"duplicate kernel order {k.order}")
            self.kernels[k.order] = k

    @property
    def orders(self):
        return tuple(sorted(self.kernels))

    def get(self, order):
        return self.kernels.get(order)

    def __iter__(self):
        return iter(self.kernels[o] for o in self.orders)

    def __len__(self):
        return len(self.kernels)


def _one(x):
    return np.ones_like(np.asarray(x, dtype=np.float64))


def _identity(x):
    return np.asarray(x, dtype=np.float64)


def _neg(x):
    return -np.asarray(x, dtype=np.float64)


def linear_mean_kernel(order, box=(0.0, 1.0)):
    """Mean reversion toward the head average: K = mean(x_1..x_l) - x.

    On the state box [a, b]: B = b - a and L = 2 (1 from the tail plus
    l * (1/l) from the heads).
    """
    a, b = box
    if not b > a:
        raise ParameterError("box must satisfy b > a")

    def fn(tail, heads):
        return heads.mean(axis=0) - tail

    inv = 1.0 / order

    def scaled_tail(x, c=inv):
        return np.full_like(np.asarray(x, dtype=np.float64), c)

    terms = []
    for k in range(order):
        factors = tuple(_identity if m == k else _one for m in range(order))
        terms.append(SeparableTerm(tail_factor=scaled_tail, head_factors=factors))
    terms.append(SeparableTerm(tail_factor=_neg, head_factors=(_one,) * order))

    return InteractionKernel(order=order, fn=fn, bound=float(b - a), lipschitz=2.0,
                             symmetric_head=True, separable=tuple(terms),
                             name=f"linear_mean[{order}]", box=(float(a), float(b)))


def kuramoto_kernel(order):
    """Phase coupling K = sin(x_1 + ... + x_l - l x); B = 1, L = l."""

    def fn(tail, heads):
        return np.sin(heads.sum(axis=0) - order * tail)

    return InteractionKernel(order=order, fn=fn, bound=1.0, lipschitz=float(order),
                             symmetric_head=True, name=f"kuramoto[{order}]")


def skardal_kernels():
    """Three-level phase family; the order-2 and order-3 members are not
    invariant under all head permutations."""

    def k1(tail, heads):
        return np.sin(heads[0] - tail)

    def k2(tail, heads):
        return np.sin(2.0 * heads[0] - heads[1] - tail)

    def k3(tail, heads):
        return np.sin(heads[0] + heads[1] - heads[2] - tail)

    return KernelFamily([
        InteractionKernel(1, k1, bound=1.0, lipschitz=1.0, symmetric_head=True,
                          name="skardal[1]"),
        InteractionKernel(2, k2, bound=1.0, lipschitz=2.0, symmetric_head=False,
                          name="skardal[2]"),
        InteractionKernel(3, k3, bound=1.0, lipschitz=1.0, symmetric_head=False,
                          name="skardal[3]"),
    ])


def opinion_diam_kernel(order, lam, box=(0.0, 1.0)):
    """Diameter-modulated attraction: K = exp(lam * diam(heads)) * (mean(heads) - x).

    lam = 0 recovers the plain mean-reversion kernel.  Constants on [a, b]:
    with g = exp(max(lam, 0) * (b - a)),  B = (b - a) g and
    L = (2 + |lam| (b - a)) g.
    """
    a, b = box
    if not b > a:
        raise ParameterError("box must satisfy b > a")
    width = float(b - a)
    gain = math.exp(max(lam, 0.0) * width)

    def fn(tail, heads):
        diam = heads.max(axis=0) - heads.min(axis=0)
        return np.exp(lam * diam) * (heads.mean(axis=0) - tail)

    return InteractionKernel(order=order, fn=fn, bound=width * gain,
                             lipschitz=(2.0 + abs(lam) * width) * gain,
                             symmetric_head=True,
                             name=f"opinion[{order},lam={lam}]", box=(float(a), float(b)))


@dataclass
class AssumptionReport:
    """Series sums plus sampled violations of declared kernel constants."""

    eta: float
    series_bound: float       # sum over orders of sqrt(l!) B_l / eta^l
    series_lipschitz: float   # sum over orders of l * L_l
    bound_violations: list = field(default_factory=list)
    lipschitz_violations: list = field(default_factory=list)
    head_symmetry_violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not (self.bound_violations or self.lipschitz_violations
                    or self.head_symmetry_violations)


def check_assumption1(family, eta, num_samples=10_000, seed=0, box=None, slack=1e-9):
    """Evaluate the summability series and sample-check declared constants.

    Samples `num_samples` random argument tuples per kernel inside the kernel's
    declared box (or `box`), recording any violation of |K| <= B, of the
    sum-of-increments Lipschitz estimate with constant L, and of head symmetry
    where claimed, each with tolerance `slack`.
    """
    if eta <= 0:
        raise ParameterError(f"eta must be positive, got {eta}")
    series_bound = 0.0
    series_lip = 0.0
    report = AssumptionReport(eta=float(eta), series_bound=0.0, series_lipschitz=0.0)
    rng = np.random.default_rng(seed)
    for kernel in family:
        l = kernel.order
        series_bound += math.sqrt(math.factorial(l)) * kernel.bound / eta ** l
        series_lip += l * kernel.lipschitz
        lo, hi = box if box is not None else (kernel.box or (0.0, 1.0))
        pts = rng.uniform(lo, hi, size=(2, l + 1, num_samples))
        x, heads = pts[0, 0], pts[0, 1:]
        y, heads2 = pts[1, 0], pts[1, 1:]
        vx = kernel(x, heads)
        vy = kernel(y, heads2)
        over = np.abs(vx) - kernel.bound
        if np.any(over > slack):
            i = int(np.argmax(over))
            report.bound_violations.append(
                (kernel.name, float(np.abs(vx)[i]), kernel.bound))
        allowed = kernel.lipschitz * (np.abs(x - y) + np.abs(heads - heads2).sum(axis=0))
        gap = np.abs(vx - vy) - allowed
        if np.any(gap > slack):
            i = int(np.argmax(gap))
            report.lipschitz_violations.append(
                (kernel.name, float(np.abs(vx - vy)[i]), float(allowed[i])))
        if kernel.symmetric_head and l > 1:
            perm = rng.permutation(l)
            while np.array_equal(perm, np.arange(l)):
                perm = rng.permutation(l)
            diff = np.abs(kernel(x, heads) - kernel(x, heads[perm]))
            if np.any(diff > slack):
                i = int(np.argmax(diff))
                report.head_symmetry_violations.append(
                    (kernel.name, tuple(perm.tolist()), float(diff[i])))
    report.series_bound = series_bound
    report.series_lipschitz = series_lip
    return report
