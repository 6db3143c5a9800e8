"""N-agent dynamics driven by weighted higher-order interactions.

The state of agent i evolves by the sum over interaction orders l and over
stored multi-indices (i, j_1..j_l) of w * K_l(x_i, x_{j_1}, ..., x_{j_l}).
Canonical sparse storage is expanded at evaluation time: fully symmetric rows
contribute through every choice of tail position, and head-symmetric kernels
absorb the l! head orderings into a single factor.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ._util import conjugate_exponent, pack_rows, rng_for
from .errors import IntegrationError, ParameterError
from .metrics import DiscreteMeasure, FiberedAtoms


class ParticleState:
    """Positions of N agents (shape (N,) for scalar states, (N, d) otherwise)."""

    def __init__(self, states, time=0.0):
        self.states = np.asarray(states, dtype=np.float64)
        if self.states.ndim not in (1, 2) or self.states.shape[0] == 0:
            raise ParameterError("states must be a nonempty (N,) or (N, d) array")
        if not np.all(np.isfinite(self.states)):
            raise ParameterError("states must be finite")
        if time < 0:
            raise ParameterError("time must be nonnegative")
        self.time = float(time)

    @property
    def num_agents(self):
        return self.states.shape[0]


@dataclass
class Trajectory:
    """Snapshots of the agent states at strictly increasing times."""

    times: np.ndarray      # (S,)
    positions: np.ndarray  # (S, N) or (S, N, d)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.positions = np.asarray(self.positions, dtype=np.float64)
        if self.times.ndim != 1 or self.positions.shape[0] != self.times.shape[0]:
            raise ParameterError("need one snapshot per time")
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise ParameterError("times must be strictly increasing")

    @property
    def final(self):
        return self.positions[-1]

    def at_time(self, t, tol=1e-9):
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > tol:
            raise ParameterError(f"no snapshot at t={t} (nearest {self.times[k]})")
        return self.positions[k]


def _distinct_mask(rows):
    s = np.sort(rows, axis=1)
    return np.all(np.diff(s, axis=1) != 0, axis=1) if rows.shape[1] > 1 else \
        np.ones(rows.shape[0], dtype=bool)


def _accumulate(force, tails, values):
    if force.ndim == 1:
        force += np.bincount(tails, weights=values, minlength=force.shape[0])
    else:
        for c in range(force.shape[1]):
            force[:, c] += np.bincount(tails, weights=values[:, c],
                                       minlength=force.shape[0])


def _heads_first(x, rows_heads):
    """Gather head states as (l, E[, d]) for kernel evaluation."""
    return np.moveaxis(x[rows_heads], 1, 0)


def _tensor_for_kernel(hypergraph, kernel):
    order = kernel.order
    if order + 1 > hypergraph.max_rank:
        raise ParameterError(
            f"kernel order {order} needs rank {order + 1} > max_rank {hypergraph.max_rank}")
    tensor = hypergraph.tensor(order)
    if tensor is None:
        raise ParameterError(f"no adjacency tensor stored for kernel order {order}")
    return tensor


def force_particles(hypergraph, kernels, states):
    """Interaction force on every agent (same shape as `states`).

    Iterates only stored nonzero rows; rows with repeated indices carry no
    weight.  Each kernel order must have an adjacency tensor (possibly empty).
    """
    x = states.states if isinstance(states, ParticleState) else \
        np.asarray(states, dtype=np.float64)
    n = x.shape[0]
    if n != hypergraph.num_nodes:
        raise ParameterError(f"state count {n} != node count {hypergraph.num_nodes}")
    force = np.zeros_like(x)
    for kernel in kernels:
        tensor = _tensor_for_kernel(hypergraph, kernel)
        if tensor.num_entries == 0:
            continue
        order = tensor.order
        keep = _distinct_mask(tensor.indices)
        rows = tensor.indices[keep] - 1
        w = tensor.weights[keep]
        if rows.shape[0] == 0:
            continue
        factorial = math.factorial(order)
        if tensor.canonical and tensor.fully_symmetric:
            tail_positions = range(order + 1)
        else:
            tail_positions = (0,)
        for p in tail_positions:
            tails = rows[:, p]
            head_cols = [c for c in range(order + 1) if c != p]
            heads = rows[:, head_cols]
            xt = x[tails]
            if not tensor.canonical:
                vals = kernel(xt, _heads_first(x, heads))
                _accumulate(force, tails, _scale(vals, w))
            elif kernel.symmetric_head:
                vals = kernel(xt, _heads_first(x, heads))
                _accumulate(force, tails, _scale(vals, factorial * w))
            else:
                for perm in itertools.permutations(range(order)):
                    vals = kernel(xt, _heads_first(x, heads[:, perm]))
                    _accumulate(force, tails, _scale(vals, w))
    return force


def _scale(vals, w):
    return vals * (w if vals.ndim == 1 else w[:, None])


def integrate(hypergraph, kernels, x0, t_final, dt, method="rk4", drift=None):
    """March the agent ODE system, snapshotting every time step.

    Snapshots land at 0, dt, 2 dt, ..., t_final, the final step shortened to
    hit t_final exactly.  `drift` is an optional per-agent constant velocity
    (natural frequencies).  A non-finite state aborts with the failure time.
    """
    if dt <= 0:
        raise ParameterError(f"dt must be positive, got {dt}")
    if t_final < 0:
        raise ParameterError(f"t_final must be nonnegative, got {t_final}")
    if method not in ("rk4", "euler"):
        raise ParameterError(f"method must be rk4 or euler, got {method!r}")
    x = np.array(x0.states if isinstance(x0, ParticleState) else x0, dtype=np.float64)
    if drift is not None:
        drift = np.asarray(drift, dtype=np.float64)
        if drift.shape != x.shape:
            raise ParameterError("drift must match the state shape")

    def rhs(state):
        f = force_particles(hypergraph, kernels, state)
        return f if drift is None else f + drift

    times = [0.0]
    snaps = [x.copy()]
    t = 0.0
    tiny = 1e-12 * max(1.0, t_final)
    while t < t_final - tiny:
        h = min(dt, t_final - t)
        if method == "euler":
            x = x + h * rhs(x)
        else:
            k1 = rhs(x)
            k2 = rhs(x + 0.5 * h * k1)
            k3 = rhs(x + 0.5 * h * k2)
            k4 = rhs(x + h * k3)
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += h
        if not np.all(np.isfinite(x)):
            raise IntegrationError(f"non-finite state at t={t:.6g}")
        times.append(t)
        snaps.append(x.copy())
    return Trajectory(np.array(times), np.stack(snaps, axis=0))


def sample_initial_uniform(num_agents, seed, replica=0, box=(0.0, 1.0), dim=1):
    """I.i.d. uniform initial states with a counter-based stream per agent.

    Agent i's value comes from the stream keyed (seed, replica, i), so sweeps
    are reproducible independently of scheduling or worker count.
    """
    lo, hi = box
    if not hi > lo:
        raise ParameterError("box must satisfy hi > lo")
    shape = (num_agents,) if dim == 1 else (num_agents, dim)
    out = np.empty(shape)
    for i in range(num_agents):
        out[i] = rng_for(seed, replica, i).uniform(lo, hi, size=None if dim == 1 else dim)
    return out


def empirical_fibered(states):
    """Label-fibered empirical measure: fiber i carries a unit atom at x_i."""
    x = states.states if isinstance(states, ParticleState) else \
        np.asarray(states, dtype=np.float64)
    if x.ndim != 1:
        raise ParameterError("fibered empirical measures are defined for scalar states")
    return FiberedAtoms([DiscreteMeasure([v], [1.0]) for v in x])


@dataclass
class McKeanConstants:
    """Stability and fluctuation constants of the error estimate."""

    c_tilde_infty: float  # max_i sum_l L_l sum_{j vec} w
    c_p: float            # mixed l_q / l_p double sum
    epsilon_p: float      # 2 (mean_i (sum_l sqrt(l!) B_l (sum_{j vec} w^2)^(1/2))^p)^(1/p)
    p: float
    q: float


def _ordered_tuples(tensor):
    """Expand canonical storage into all ordered loop-free multi-indices."""
    keep = _distinct_mask(tensor.indices)
    rows = tensor.indices[keep] - 1
    w = tensor.weights[keep]
    order = tensor.order
    if rows.shape[0] == 0 or not tensor.canonical:
        return rows, w
    if tensor.fully_symmetric:
        perms = list(itertools.permutations(range(order + 1)))
    else:
        perms = [(0, *p) for p in itertools.permutations(range(1, order + 1))]
    out = np.concatenate([rows[:, perm] for perm in perms], axis=0)
    return out, np.tile(w, len(perms))


def mckean_error_constants(hypergraph, kernels, p):
    """The three constants controlling the particle-vs-limit error.

    c_tilde_infty bounds force differences agent-wise, c_p is the mixed
    l_q-over-one-head / l_p-over-agents stability sum (q conjugate to p,
    max norms at p = 1), and epsilon_p is the fluctuation size of the
    independence-restored surrogate.  Requires p in [1, 2].
    """
    if not (1.0 <= p <= 2.0):
        raise ParameterError(f"p must lie in [1, 2], got {p}")
    q = conjugate_exponent(p)
    n = hypergraph.num_nodes
    deg_lip = np.zeros(n)    # sum_l L_l sum_{j vec} w, per tail
    fluct = np.zeros(n)      # sum_l sqrt(l!) B_l sqrt(sum_{j vec} w^2), per tail
    stab = np.zeros(n)       # sum_l L_l sum_slots sum_other (q-norm over one head)
    for kernel in kernels:
        tensor = _tensor_for_kernel(hypergraph, kernel)
        order = tensor.order
        tuples, w = _ordered_tuples(tensor)
        if tuples.shape[0] == 0:
            continue
        tails = tuples[:, 0]
        deg_lip += kernel.lipschitz * np.bincount(tails, weights=w, minlength=n)
        s2 = np.bincount(tails, weights=w * w, minlength=n)
        fluct += math.sqrt(math.factorial(order)) * kernel.bound * np.sqrt(s2)
        slot_total = np.zeros(n)
        for k in range(order):
            other_cols = [c for c in range(1, order + 1) if c != 1 + k]
            group_rows = tuples[:, [0, *other_cols]]
            keys = pack_rows(group_rows, n + 1)
            uniq, codes = np.unique(keys, return_inverse=True)
            if math.isinf(q):
                norms = np.zeros(uniq.size)
                np.maximum.at(norms, codes, w)
            else:
                acc = np.zeros(uniq.size)
                np.add.at(acc, codes, w ** q)
                norms = acc ** (1.0 / q)
            group_tails = (uniq // (n + 1) ** (group_rows.shape[1] - 1)).astype(np.int64)
            slot_total += np.bincount(group_tails, weights=norms, minlength=n)
        stab += kernel.lipschitz * slot_total
    c_tilde = float(deg_lip.max()) if n else 0.0
    eps = 2.0 * float((np.mean(fluct ** p)) ** (1.0 / p))
    c_p = float((np.sum(stab ** p)) ** (1.0 / p))
    return McKeanConstants(c_tilde_infty=c_tilde, c_p=c_p, epsilon_p=eps,
                           p=float(p), q=float(q))
