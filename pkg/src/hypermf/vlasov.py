"""Fibered transport solver for the mean-field limit dynamics.

Evolves a label-indexed family of 1-D probability densities under the
nonlocal force assembled from a hypergraphon and an interaction-kernel
family: each fiber obeys a continuity equation, coupled to the others only
through the force.  Also provides the label-grid ODE for the special case
where every fiber is a Dirac mass, and the per-agent-block coupled system
used to compare finite hypergraphs against their step-function embedding.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._util import float_repr, rng_for
from .errors import (CFLError, IntegrationError, ParameterError, ParseError,
                     ResourceLimitError)
from .hypergraphon import step_from_hypergraph

DENSE_BUDGET = 1 << 27


class FiberedDensity:
    """Non-negative densities rho[fiber, cell] on a uniform x-grid.

    Every fiber is a probability measure: sum_cell rho * dx = 1 (checked to
    1e-10 at construction).  Fiber k represents labels in [k/n, (k+1)/n).
    """

    def __init__(self, x_min, x_max, rho, validate=True):
        self.x_min = float(x_min)
        self.x_max = float(x_max)
        if not self.x_max > self.x_min:
            raise ParameterError("x_max must exceed x_min")
        self.rho = np.asarray(rho, dtype=np.float64)
        if self.rho.ndim != 2 or self.rho.shape[0] < 1 or self.rho.shape[1] < 2:
            raise ParameterError("rho must have shape (n_fibers, nx) with nx >= 2")
        if validate:
            if not np.all(np.isfinite(self.rho)):
                raise ParameterError("density values must be finite")
            if self.rho.min() < 0.0:
                raise ParameterError("density values must be non-negative")
            mass = self.mass_per_fiber()
            worst = float(np.abs(mass - 1.0).max())
            if worst > 1e-10:
                raise ParameterError(
                    f"every fiber must have unit mass (worst deviation {worst:.3e})")

    @property
    def n_fibers(self):
        return self.rho.shape[0]

    @property
    def nx(self):
        return self.rho.shape[1]

    @property
    def dx(self):
        return (self.x_max - self.x_min) / self.nx

    @property
    def x_centers(self):
        return self.x_min + (np.arange(self.nx) + 0.5) * self.dx

    @property
    def xi_centers(self):
        return (np.arange(self.n_fibers) + 0.5) / self.n_fibers

    def mass_per_fiber(self):
        return self.rho.sum(axis=1) * self.dx

    def fiber_means(self):
        return (self.rho * self.x_centers).sum(axis=1) * self.dx / self.mass_per_fiber()

    def fiber_variances(self):
        m = self.fiber_means()
        second = (self.rho * self.x_centers ** 2).sum(axis=1) * self.dx / self.mass_per_fiber()
        return second - m ** 2

    def with_rho(self, rho, validate=False):
        return FiberedDensity(self.x_min, self.x_max, rho, validate=validate)

    def fiber_for_label(self, xi):
        return min(int(float(xi) * self.n_fibers), self.n_fibers - 1)

    @staticmethod
    def uniform(n_fibers, nx, x_min=-0.1, x_max=1.1, support=(0.0, 1.0)):
        """Each fiber uniform on `support` (exactly renormalized per fiber)."""
        lo, hi = support
        if not (x_min <= lo < hi <= x_max):
            raise ParameterError("support must sit inside the grid box")
        dx = (x_max - x_min) / nx
        edges = x_min + np.arange(nx + 1) * dx
        overlap = np.clip(np.minimum(edges[1:], hi) - np.maximum(edges[:-1], lo), 0.0, None)
        row = overlap / dx / (hi - lo)
        row = row / (row.sum() * dx)
        return FiberedDensity(x_min, x_max, np.tile(row, (n_fibers, 1)))

    @staticmethod
    def gaussian(n_fibers, nx, centers, sigma, x_min=-0.1, x_max=1.1):
        """Per-fiber narrow Gaussian bumps, renormalized on the grid."""
        centers = np.broadcast_to(np.asarray(centers, dtype=np.float64), (n_fibers,))
        dx = (x_max - x_min) / nx
        x = x_min + (np.arange(nx) + 0.5) * dx
        rho = np.exp(-0.5 * ((x[None, :] - centers[:, None]) / sigma) ** 2)
        rho = rho / (rho.sum(axis=1, keepdims=True) * dx)
        return FiberedDensity(x_min, x_max, rho)


# ---------------------------------------------------------------------------
# force assembly


def level_tensors(w, n_fibers, orders):
    """Midpoint-grid evaluation of every requested level, keyed by order."""
    out = {}
    centers = (np.arange(n_fibers) + 0.5) / n_fibers
    for order in orders:
        if n_fibers ** (order + 1) > DENSE_BUDGET:
            raise ResourceLimitError(
                f"label-grid tensor of order {order} at {n_fibers} fibers exceeds budget")
        grids = np.meshgrid(*([centers] * (order + 1)), indexing="ij")
        out[order] = w.evaluate(order, np.stack(grids, axis=-1))
    return out


def _check_kernel_orders(w, kernels):
    for kernel in kernels:
        if kernel.order not in w.active_orders:
            raise ParameterError(
                f"kernel order {kernel.order} is not an active hypergraphon order")


def verify_separable(kernel, box=(0.0, 1.0), num_samples=100, seed=1234, tol=1e-8):
    """Compare the declared separable decomposition against direct evaluation."""
    if kernel.separable is None:
        return
    lo, hi = kernel.box if kernel.box is not None else box
    rng = rng_for(seed, kernel.order)
    pts = rng.uniform(lo, hi, size=(kernel.order + 1, num_samples))
    direct = kernel(pts[0], pts[1:])
    fast = kernel.separable_eval(pts[0], pts[1:])
    worst = float(np.abs(direct - fast).max())
    if worst > tol * (1.0 + float(np.abs(direct).max())):
        raise ParameterError(
            f"kernel {kernel.name}: separable decomposition deviates by {worst:.3e}")


def mean_field_force(w, density, kernels, tensors=None, budget=DENSE_BUDGET):
    """Force F[fiber, cell] at the grid midpoints.

    Separable kernels use the moment fast path: per-fiber head-factor moments
    are contracted against the level tensor, then combined with the tail
    factors.  Kernels without a declared decomposition fall back to dense
    nested quadrature over the x-grid, refused above the work budget.
    """
    _check_kernel_orders(w, kernels)
    n = density.n_fibers
    if tensors is None:
        tensors = level_tensors(w, n, [k.order for k in kernels])
    x = density.x_centers
    mass_weights = density.rho * density.dx  # (n, nx) cell masses
    force = np.zeros_like(density.rho)
    for kernel in kernels:
        order = kernel.order
        level = tensors[order]
        scale = float(n) ** (-order)
        if kernel.separable is not None:
            for term in kernel.separable:
                contracted = level
                for b in term.head_factors:
                    beta = mass_weights @ np.asarray(b(x), dtype=np.float64)  # (n,)
                    contracted = np.tensordot(contracted, beta, axes=([1], [0]))
                tail_vals = np.asarray(term.tail_factor(x), dtype=np.float64)
                force += scale * np.outer(contracted, tail_vals)
        else:
            nx = density.nx
            if max(nx, n) ** (order + 1) > budget:
                raise ResourceLimitError(
                    f"generic quadrature for order {order} exceeds the work budget; "
                    "declare a separable decomposition for this kernel")
            head_grids = np.meshgrid(*([x] * order), indexing="ij")
            heads = np.stack([g[None] * np.ones((nx,) + (1,) * order) for g in head_grids])
            tail = x[(slice(None),) + (None,) * order]
            kt = kernel(tail * np.ones((nx,) * (order + 1)), heads)
            inner = kt
            for _ in range(order):
                # contract one head x-axis against each fiber's cell masses
                inner = np.tensordot(inner, mass_weights, axes=([1], [1]))
            # inner[c, m_1..m_l]; contract the label axes against the level
            contracted = np.tensordot(level, inner,
                                      axes=(list(range(1, order + 1)),
                                            list(range(1, order + 1))))
            force += scale * contracted
    return force


def _level_l1_per_label(level, order):
    """Quadrature of the head integral: mean of the level over head axes."""
    return np.abs(level).mean(axis=tuple(range(1, order + 1)))


def force_sup_bound(w, kernels, n_fibers, tensors=None):
    """B_F = max over labels of sum_l B_l * ||w_l(xi, .)||_L1 (same quadrature
    as the force assembly, so computed forces respect it)."""
    _check_kernel_orders(w, kernels)
    if tensors is None:
        tensors = level_tensors(w, n_fibers, [k.order for k in kernels])
    total = np.zeros(n_fibers)
    for kernel in kernels:
        total += kernel.bound * _level_l1_per_label(tensors[kernel.order], kernel.order)
    return float(total.max())


def force_lipschitz_bound(w, kernels, n_fibers, tensors=None):
    """L_F = max over labels of sum_l L_l * ||w_l(xi, .)||_L1."""
    _check_kernel_orders(w, kernels)
    if tensors is None:
        tensors = level_tensors(w, n_fibers, [k.order for k in kernels])
    total = np.zeros(n_fibers)
    for kernel in kernels:
        total += kernel.lipschitz * _level_l1_per_label(tensors[kernel.order], kernel.order)
    return float(total.max())


def wellposedness_constant(w, kernels, p, n_fibers=64, tensors=None):
    """Fixed-point/stability constant C_p of the limiting dynamics.

    C_p is the L^p (over the tail label) norm of
    sum_l max(B_l, L_l) * sum_slots || head-slot q-norm of the L1-in-the-
    other-heads integral of w_l ||, with q conjugate to p.  Midpoint
    quadrature on the fiber grid throughout.
    """
    if not (p >= 1.0 or math.isinf(p)):
        raise ParameterError(f"p must satisfy p >= 1, got {p}")
    q = 1.0 if math.isinf(p) else (math.inf if p == 1.0 else p / (p - 1.0))
    _check_kernel_orders(w, kernels)
    if tensors is None:
        tensors = level_tensors(w, n_fibers, [k.order for k in kernels])
    per_label = np.zeros(n_fibers)
    for kernel in kernels:
        order = kernel.order
        level = np.abs(tensors[order])
        bl = max(kernel.bound, kernel.lipschitz)
        for k in range(1, order + 1):
            other = [ax for ax in range(1, order + 1) if ax != k]
            g = level.mean(axis=tuple(other)) if other else level  # (n, n) over (xi, xi_k)
            if math.isinf(q):
                slot = g.max(axis=1)
            else:
                slot = (np.mean(g ** q, axis=1)) ** (1.0 / q)
            per_label += bl * slot
    if math.isinf(p):
        return float(per_label.max())
    return float((np.mean(per_label ** p)) ** (1.0 / p))


# ---------------------------------------------------------------------------
# transport


def step_transport(density, force, dt, cfl=0.9):
    """One conservative upwind finite-volume step per fiber.

    Interface velocities are face averages of the cell-center force with
    zero-flux boundaries, so per-fiber mass telescopes exactly.  The time
    step must satisfy dt * max|F| <= cfl * dx.
    """
    if dt <= 0:
        raise ParameterError(f"dt must be positive, got {dt}")
    f = np.asarray(force, dtype=np.float64)
    if f.shape != density.rho.shape:
        raise ParameterError("force must match the density grid")
    dx = density.dx
    max_f = float(np.abs(f).max())
    if dt * max_f > cfl * dx * (1.0 + 1e-12):
        raise CFLError(
            f"CFL violation: dt*max|F| = {dt * max_f:.6g} > {cfl}*dx = {cfl * dx:.6g} "
            f"(max|F| = {max_f:.6g}, need dt <= {cfl * dx / max_f:.6g})")
    u = 0.5 * (f[:, :-1] + f[:, 1:])  # interior interface velocities
    upwind = np.where(u > 0.0, density.rho[:, :-1], density.rho[:, 1:])
    flux = np.zeros((density.n_fibers, density.nx + 1))
    flux[:, 1:-1] = u * upwind
    rho_new = density.rho - (dt / dx) * (flux[:, 1:] - flux[:, :-1])
    low = float(rho_new.min())
    if low < 0.0:
        if low < -1e-12 * max(1.0, float(density.rho.max())):
            raise IntegrationError(
                f"transport produced negative density {low:.3e}; "
                "the velocity field diverges too strongly for this CFL number")
        rho_new = np.maximum(rho_new, 0.0)
    return density.with_rho(rho_new)


@dataclass
class DensitySeries:
    """Density snapshots at requested times (plus optional tracer paths)."""

    times: tuple
    densities: list
    tracers: object = None  # LabelTrajectory of passive characteristics

    def at_time(self, t, tol=1e-9):
        for tk, rho in zip(self.times, self.densities):
            if abs(tk - t) <= tol:
                return rho
        raise ParameterError(f"no snapshot at t={t} (have {self.times})")


def solve(w, kernels, rho0, t_final, snapshot_times=None, dt_max=0.1, cfl=0.9,
          max_steps=2_000_000, tracers=None):
    """March the fibered transport system to t_final.

    The force is refreshed every step; the step size is the largest value
    allowed by the CFL condition, capped at dt_max and clipped so snapshot
    times are hit exactly.  `tracers`, when given as (labels, positions),
    are passive characteristics advanced through the same per-step force
    field (piecewise-linear in x, so its Lipschitz constant never exceeds
    the field's); their paths are returned on `DensitySeries.tracers`.
    """
    if t_final < 0:
        raise ParameterError("t_final must be nonnegative")
    if snapshot_times is None:
        snapshot_times = (0.0, t_final)
    snaps = sorted(set(float(t) for t in snapshot_times))
    if snaps and (snaps[0] < -1e-12 or snaps[-1] > t_final + 1e-12):
        raise ParameterError("snapshot times must lie within [0, t_final]")
    for kernel in kernels:
        verify_separable(kernel, box=(rho0.x_min, rho0.x_max))
    tensors = level_tensors(w, rho0.n_fibers, [k.order for k in kernels])
    tol = 1e-12 * max(1.0, t_final)
    out_times, out_densities = [], []
    tracer_labels = tracer_x = tracer_rows = None
    tracer_values = []
    if tracers is not None:
        tracer_labels = np.asarray(tracers[0], dtype=np.float64)
        tracer_x = np.asarray(tracers[1], dtype=np.float64).copy()
        if tracer_labels.shape != tracer_x.shape or tracer_labels.ndim != 1:
            raise ParameterError("tracers must be matching 1-D (labels, positions)")
        tracer_rows = np.array([rho0.fiber_for_label(xi) for xi in tracer_labels])

    def tracer_velocity(force, x):
        return np.array([np.interp(v, rho0.x_centers, force[row])
                         for row, v in zip(tracer_rows, x)])

    density = rho0
    t = 0.0
    pending = list(snaps)
    for _ in range(max_steps):
        while pending and pending[0] <= t + tol:
            out_times.append(pending.pop(0))
            out_densities.append(density)
            if tracer_x is not None:
                tracer_values.append(tracer_x.copy())
        if t >= t_final - tol:
            break
        force = mean_field_force(w, density, kernels, tensors=tensors)
        max_f = float(np.abs(force).max())
        dt = dt_max if max_f == 0.0 else min(dt_max, cfl * density.dx / max_f)
        horizon = pending[0] if pending else t_final
        dt = min(dt, horizon - t)
        if dt <= 0:
            raise IntegrationError(f"step size collapsed at t={t:.6g}")
        if tracer_x is not None:
            k1 = tracer_velocity(force, tracer_x)
            k2 = tracer_velocity(force, tracer_x + 0.5 * dt * k1)
            k3 = tracer_velocity(force, tracer_x + 0.5 * dt * k2)
            k4 = tracer_velocity(force, tracer_x + dt * k3)
            tracer_x = tracer_x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        density = step_transport(density, force, dt, cfl=cfl)
        t += dt
    else:
        raise IntegrationError(f"exceeded {max_steps} steps before t_final")
    tracer_traj = None
    if tracer_x is not None:
        tracer_traj = LabelTrajectory(times=tuple(out_times),
                                      values=np.array(tracer_values),
                                      labels=tuple(tracer_labels))
    return DensitySeries(times=tuple(out_times), densities=out_densities,
                         tracers=tracer_traj)


# ---------------------------------------------------------------------------
# continuum-limit label ODE


@dataclass
class LabelTrajectory:
    """States X(t, label) on quadrature labels (and optional extra queries)."""

    times: np.ndarray   # (S,)
    values: np.ndarray  # (S, M)
    labels: np.ndarray  # (M,)

    def value_at(self, t, label, tol=1e-9):
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > tol:
            raise ParameterError(f"no snapshot at t={t}")
        j = int(np.argmin(np.abs(self.labels - label)))
        return float(self.values[k, j])


def solve_continuum(w, kernels, x0, t_final, dt, n_fibers=64, query_labels=None):
    """RK4 on the label-grid ODE (one state per label; heads integrate over
    the midpoint grid).

    Extra `query_labels` evolve passively: they feel the force but carry no
    quadrature weight, so closed-form solutions can be read off at arbitrary
    labels (including the endpoints).
    """
    _check_kernel_orders(w, kernels)
    if dt <= 0:
        raise ParameterError("dt must be positive")
    mids = (np.arange(n_fibers) + 0.5) / n_fibers
    queries = np.asarray(query_labels, dtype=np.float64) if query_labels is not None \
        else np.zeros(0)
    labels = np.concatenate([mids, queries])
    if callable(x0):
        x = np.asarray(x0(labels), dtype=np.float64)
    else:
        x = np.asarray(x0, dtype=np.float64)
        if x.shape != (n_fibers,):
            raise ParameterError("array x0 must have one value per fiber")
        if queries.size:
            raise ParameterError("query labels need a callable x0")
        labels = mids
    m = labels.size

    tensors = {}
    for kernel in kernels:
        order = kernel.order
        if m * n_fibers ** order > DENSE_BUDGET:
            raise ResourceLimitError("continuum level tensor exceeds budget")
        grids = np.meshgrid(labels, *([mids] * order), indexing="ij")
        tensors[order] = w.evaluate(order, np.stack(grids, axis=-1))

    def rhs(state):
        out = np.zeros(m)
        heads_state = state[:n_fibers]
        for kernel in kernels:
            order = kernel.order
            head_grids = np.meshgrid(*([heads_state] * order), indexing="ij")
            heads = np.stack([g[None] for g in head_grids])
            tail = state[(slice(None),) + (None,) * order]
            kt = kernel(tail * np.ones((m,) + (n_fibers,) * order), heads)
            out += (tensors[order] * kt).sum(axis=tuple(range(1, order + 1))) \
                / float(n_fibers) ** order
        return out

    times = [0.0]
    snaps = [x.copy()]
    t = 0.0
    tiny = 1e-12 * max(1.0, t_final)
    while t < t_final - tiny:
        h = min(dt, t_final - t)
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
    return LabelTrajectory(np.array(times), np.stack(snaps, axis=0), labels)


def solve_coupled_pde(hypergraph, kernels, per_agent_laws, t_final,
                      snapshot_times=None, x_min=-0.1, x_max=1.1, nx=64,
                      dt_max=0.1, cfl=0.9):
    """Per-agent-block system: one fiber per agent, level = step embedding.

    `per_agent_laws` is an (N, nx) array of per-agent initial densities on
    the x-grid (each is renormalized to unit mass).
    """
    laws = np.asarray(per_agent_laws, dtype=np.float64)
    n = hypergraph.num_nodes
    if laws.shape != (n, nx):
        raise ParameterError(f"per-agent laws must have shape ({n}, {nx})")
    if laws.min() < 0:
        raise ParameterError("initial laws must be non-negative")
    dx = (x_max - x_min) / nx
    mass = laws.sum(axis=1) * dx
    if np.any(mass <= 0):
        raise ParameterError("each agent's initial law must have positive mass")
    rho0 = FiberedDensity(x_min, x_max, laws / mass[:, None])
    w = step_from_hypergraph(hypergraph)
    return solve(w, kernels, rho0, t_final, snapshot_times=snapshot_times,
                 dt_max=dt_max, cfl=cfl)


def flow_map_frozen(force_row, density, x_start, t_final, dt):
    """Characteristics of one fiber's frozen force field (RK4 + linear interp).

    Positions outside the grid see the nearest edge value (matching the
    zero-flux treatment of the transport scheme).
    """
    x_grid = density.x_centers
    f = np.asarray(force_row, dtype=np.float64)
    x = np.array(x_start, dtype=np.float64)

    def rhs(pos):
        return np.interp(pos, x_grid, f)

    t = 0.0
    tiny = 1e-12 * max(1.0, t_final)
    while t < t_final - tiny:
        h = min(dt, t_final - t)
        k1 = rhs(x)
        k2 = rhs(x + 0.5 * h * k1)
        k3 = rhs(x + 0.5 * h * k2)
        k4 = rhs(x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += h
    return x


# ---------------------------------------------------------------------------
# density file format


DENSITY_FORMAT_HEADER = "density v1"


def save_density(density, path):
    lines = [f"{DENSITY_FORMAT_HEADER} nx={density.nx} nxi={density.n_fibers} "
             f"xmin={float_repr(density.x_min)} xmax={float_repr(density.x_max)}"]
    for row in density.rho:
        lines.append(" ".join(float_repr(v) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_density(path):
    with open(path) as fh:
        raw = fh.read().splitlines()
    lines = [(no, ln.strip()) for no, ln in enumerate(raw, start=1)
             if ln.strip() and not ln.strip().startswith("#")]
    if not lines:
        raise ParseError("empty file: missing header", 1)
    no, header = lines[0]
    if not header.startswith(DENSITY_FORMAT_HEADER):
        raise ParseError(f"expected '{DENSITY_FORMAT_HEADER} ...' header", no)
    try:
        fields = dict(tok.split("=", 1) for tok in header.split()[2:])
        nx = int(fields["nx"])
        nxi = int(fields["nxi"])
        x_min = float(fields["xmin"])
        x_max = float(fields["xmax"])
    except (KeyError, ValueError) as exc:
        raise ParseError(f"malformed header: {exc}", no) from None
    if len(lines) - 1 != nxi:
        raise ParseError(f"expected {nxi} fiber rows, found {len(lines) - 1}",
                         lines[-1][0])
    rows = []
    for lno, ln in lines[1:]:
        vals = ln.split()
        if len(vals) != nx:
            raise ParseError(f"expected {nx} values, got {len(vals)}", lno)
        try:
            rows.append([float(v) for v in vals])
        except ValueError:
            raise ParseError(f"malformed value in row: {ln!r}", lno) from None
    return FiberedDensity(x_min, x_max, np.array(rows))
