"""End-to-end numerical studies.

Three drivers: a particle-vs-limit convergence sweep (empirical fibered
measures against the transport solution, replica-averaged), a hypergraph
discretization study (L1 and cut-norm distances against the analytic limit
with the published rate bounds), and the qualitative figure set (tensor
heatmaps, density snapshots, particle overlays, binned densities).

Everything runs serially and deterministically: replica r of a sweep uses the
counter-based stream keyed (seed, r, agent), so outputs are byte-identical
across reruns for a fixed configuration.
"""

import math
import os
from dataclasses import dataclass

import numpy as np

from ._util import fit_loglog_slope, float_repr
from .config import config_hash
from .errors import ParameterError
from .hypergraph import build_balanced, build_homogeneous
from .hypergraphon import (balanced_hypergraphon, homogeneous_hypergraphon,
                           sample_to_step, step_from_hypergraph)
from .kernels import KernelFamily, linear_mean_kernel
from .metrics import (d_p_nu, d_square, fibered_atoms_from_density,
                      l1_level_distance, rebin_fibered_atoms)
from .particle import (empirical_fibered, integrate, mckean_error_constants,
                       sample_initial_uniform)
from .vlasov import FiberedDensity, solve
from . import plots


def write_csv(path, resolved_config, columns, rows, study=""):
    """Delimited output with the resolved-config hash stamped in the header."""
    lines = [f"# config_sha256={config_hash(resolved_config)}"]
    if study:
        lines.append(f"# study={study}")
    lines.append(",".join(columns))
    for row in rows:
        cells = [float_repr(v) if isinstance(v, float) else str(v) for v in row]
        lines.append(",".join(cells))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def benchmark_homogeneous(theta=0.1, nx=64, n_fibers=64, x_min=-0.1, x_max=1.1):
    """Two-order mean-reversion benchmark on the diameter-band limit family.

    Used by the acceptance suite for the force-bound, stability, and
    concentration checks: orders {1, 2}, mean-reversion kernels on the padded
    state box, uniform initial fibers on [0, 1].
    """
    w = homogeneous_hypergraphon(theta, orders=(1, 2))
    kernels = KernelFamily([linear_mean_kernel(1, box=(x_min, x_max)),
                            linear_mean_kernel(2, box=(x_min, x_max))])
    rho0 = FiberedDensity.uniform(n_fibers, nx, x_min, x_max, support=(0.0, 1.0))
    return w, kernels, rho0


# ---------------------------------------------------------------------------
# particle-vs-limit convergence


@dataclass
class ConvergenceRow:
    n: int
    replicas: int
    mean_distance: float
    stderr: float
    epsilon_p: float
    c_tilde_infty: float
    c_p: float


def run_convergence_study(out_dir, n_list=(50, 100, 200, 400), replicas=8, p=1.0,
                          theta=0.1, t_final=1.0, snapshot_times=(0.0, 0.5, 1.0),
                          dt=0.01, n_fibers=64, nx=64, x_min=-0.1, x_max=1.1,
                          compare_fibers=32, seed=0, make_figure=True):
    """Sweep N: integrate particles, compare empirical fibered measures with
    the limit solution in d_{p,nu}, and report replica means with diagnostics.

    The reference solution solves the transport system on the analytic limit
    family once; both sides are aggregated onto a common `compare_fibers`
    label grid before the distance is taken.  The dynamics use the order-2
    mean-reversion kernel on the diameter-band family.
    """
    os.makedirs(out_dir, exist_ok=True)
    resolved = {
        "study": "convergence", "n_list": ",".join(str(n) for n in n_list),
        "replicas": str(replicas), "p": float_repr(float(p)), "theta": float_repr(theta),
        "t_final": float_repr(t_final),
        "snapshot_times": ",".join(float_repr(t) for t in snapshot_times),
        "dt": float_repr(dt), "n_fibers": str(n_fibers), "nx": str(nx),
        "x_min": float_repr(x_min), "x_max": float_repr(x_max),
        "compare_fibers": str(compare_fibers), "seed": str(seed),
    }
    w = homogeneous_hypergraphon(theta, orders=(1, 2))
    kernels = KernelFamily([linear_mean_kernel(2, box=(x_min, x_max))])
    rho0 = FiberedDensity.uniform(n_fibers, nx, x_min, x_max, support=(0.0, 1.0))
    reference = solve(w, kernels, rho0, t_final, snapshot_times=snapshot_times)
    ref_rebinned = {
        t: rebin_fibered_atoms(fibered_atoms_from_density(rho), compare_fibers)
        for t, rho in zip(reference.times, reference.densities)}

    rows = []
    replica_rows = []
    for n in n_list:
        hypergraph = build_homogeneous(n, theta, max_rank=3)
        constants = mckean_error_constants(hypergraph, kernels, p) \
            if 1.0 <= p <= 2.0 else None
        values = []
        for replica in range(replicas):
            x0 = sample_initial_uniform(n, seed, replica=replica)
            traj = integrate(hypergraph, kernels, x0, t_final, dt)
            worst = 0.0
            for t in reference.times:
                states = traj.at_time(t)
                emp = rebin_fibered_atoms(empirical_fibered(states), compare_fibers)
                worst = max(worst, d_p_nu(emp, ref_rebinned[t], p))
            values.append(worst)
            replica_rows.append((n, replica, float(worst)))
        mean = float(np.mean(values))
        stderr = float(np.std(values, ddof=1) / math.sqrt(len(values))) \
            if len(values) > 1 else 0.0
        rows.append(ConvergenceRow(
            n=n, replicas=replicas, mean_distance=mean, stderr=stderr,
            epsilon_p=constants.epsilon_p if constants else float("nan"),
            c_tilde_infty=constants.c_tilde_infty if constants else float("nan"),
            c_p=constants.c_p if constants else float("nan")))

    write_csv(os.path.join(out_dir, "convergence.csv"), resolved,
              ["N", "replicas", "mean_distance", "stderr", "epsilon_p",
               "c_tilde_infty", "c_p"],
              [(r.n, r.replicas, r.mean_distance, r.stderr, r.epsilon_p,
                r.c_tilde_infty, r.c_p) for r in rows],
              study="convergence")
    write_csv(os.path.join(out_dir, "convergence_replicas.csv"), resolved,
              ["N", "replica", "sup_distance"], replica_rows, study="convergence")
    if make_figure:
        plots.line_plot(
            [r.n for r in rows],
            {"mean distance": [r.mean_distance for r in rows],
             "fluctuation constant": [r.epsilon_p for r in rows]},
            os.path.join(out_dir, "convergence.svg"),
            xlabel="N", ylabel="distance", loglog=True,
            title="empirical vs limit measures")
    return rows


# ---------------------------------------------------------------------------
# discretization distances


def run_cutdist_study(out_dir, n_list=(10, 20, 40, 80), theta=0.1, orders=(1, 2),
                      nodes_per_axis=8, seed=0, include_cut=True, make_figure=True):
    """Distances between analytic families and their N-node discretizations.

    For the diameter-band family (left-edge sampling) the L1 distance is
    compared against the 2 l (l+1) / N rate; for the mean-deviation family
    (midpoint sampling) against the sqrt(l+1) * Lip / N pointwise rate.  Cut
    norms between the embedded step function and the same-grid sampled limit
    use exact enumeration when feasible and the ascent heuristic otherwise.
    """
    from .hypergraphon import discretize_pointwise

    os.makedirs(out_dir, exist_ok=True)
    resolved = {
        "study": "cutdist", "n_list": ",".join(str(n) for n in n_list),
        "theta": float_repr(theta), "orders": ",".join(str(o) for o in orders),
        "nodes_per_axis": str(nodes_per_axis), "seed": str(seed),
        "include_cut": str(include_cut),
    }
    families = {
        "homogeneous": {
            "w": homogeneous_hypergraphon(theta, orders=tuple(orders)),
            "offset": 0.0,
            "bound": lambda order, n: 2.0 * order * (order + 1) / n,
        },
        "balanced": {
            "w": balanced_hypergraphon(orders=tuple(orders)),
            "offset": 0.5,
            # Euclidean Lipschitz constant of level l is 4 / sqrt(l+1)
            "bound": lambda order, n: math.sqrt(order + 1) * (4.0 / math.sqrt(order + 1)) / n,
        },
    }
    rows = []
    for name, fam in families.items():
        w = fam["w"]
        for n in n_list:
            hypergraph = discretize_pointwise(w, n, grid_offset=fam["offset"],
                                              orders=tuple(orders))
            step = step_from_hypergraph(hypergraph)
            sampled = sample_to_step(w, n)
            cut = d_square(step, sampled, seed=seed) if include_cut else None
            cut_by_order = {o: (v, mode) for o, v, mode, _ in cut.per_order} if cut else {}
            for order in orders:
                l1 = l1_level_distance(step, w, order, nodes_per_axis=nodes_per_axis)
                cut_val, cut_mode = cut_by_order.get(order, (float("nan"), "skipped"))
                rows.append((name, n, order, float(l1), float(fam["bound"](order, n)),
                             float(cut_val), cut_mode))
    write_csv(os.path.join(out_dir, "cutdist.csv"), resolved,
              ["family", "N", "order", "l1_distance", "l1_bound", "cut_norm", "cut_mode"],
              rows, study="cutdist")
    if make_figure:
        for name in families:
            series = {}
            for order in orders:
                sel = [(r[1], r[3]) for r in rows if r[0] == name and r[2] == order]
                series[f"order {order} measured"] = [v for _, v in sel]
                series[f"order {order} bound"] = [
                    families[name]["bound"](order, n) for n, _ in sel]
            plots.line_plot(sorted(set(n_list)), series,
                            os.path.join(out_dir, f"cutdist_{name}.svg"),
                            xlabel="N", ylabel="L1 distance", loglog=True,
                            title=f"{name} discretization error")
    return rows


def cutdist_slope(rows, family, order):
    """Fitted log-log slope of the measured L1 distance for one family/order."""
    pts = sorted((r[1], r[3]) for r in rows if r[0] == family and r[2] == order)
    if len(pts) < 2:
        raise ParameterError("need at least two N values to fit a slope")
    return fit_loglog_slope([n for n, _ in pts], [v for _, v in pts])


# ---------------------------------------------------------------------------
# figure reproduction


def reproduce_figures(out_dir, scale=1.0, seed=0, dt=0.02, nx=64, n_fibers=64,
                      x_min=-0.1, x_max=1.1):
    """Qualitative experiment set rendered to SVG (plus a manifest).

    Emits: step-embedding heatmaps of the two finite families, transport
    snapshots of the order-2 diameter-band run (t in {0, 4, 8, 10}) and of
    the mean-deviation run (t in {0, 0.8, 1.6, 2.4}), particle overlays and
    0.1 x 0.1 binned densities at the same times, and a cross-N comparison.
    `scale` shrinks the particle counts for quick runs; snapshot times and
    file sets are unaffected.
    """
    os.makedirs(out_dir, exist_ok=True)
    resolved = {"study": "figures", "scale": float_repr(scale), "seed": str(seed),
                "dt": float_repr(dt), "nx": str(nx), "n_fibers": str(n_fibers),
                "x_min": float_repr(x_min), "x_max": float_repr(x_max)}
    manifest = []

    def emit(name):
        path = os.path.join(out_dir, name)
        manifest.append(name)
        return path

    def agents(n):
        return max(12, int(round(n * scale)))

    box = (x_min, x_max)
    kernels2 = KernelFamily([linear_mean_kernel(2, box=box)])

    # step-embedding heatmaps of the two finite families
    for name, graph in (("homogeneous", build_homogeneous(40, 0.1, 3)),
                        ("balanced", build_balanced(40, max_rank=3))):
        step = step_from_hypergraph(graph)
        plots.heatmap(step.level(1), emit(f"tensor_{name}_order1.svg"),
                      title=f"{name} order-1 level", xlabel="label", ylabel="label",
                      extent=(0, 1, 0, 1))
        plots.heatmap(step.level(2)[step.parts // 2], emit(f"tensor_{name}_order2_slice.svg"),
                      title=f"{name} order-2 level (central slice)",
                      xlabel="label", ylabel="label", extent=(0, 1, 0, 1))

    runs = {
        "homogeneous": {
            "w": homogeneous_hypergraphon(0.1, orders=(2,)),
            "graph": lambda n: build_homogeneous(n, 0.1, max_rank=3, orders=(2,)),
            "times": (0.0, 4.0, 8.0, 10.0),
            "n_particles": agents(600),
        },
        "balanced": {
            "w": balanced_hypergraphon(orders=(2,)),
            "graph": lambda n: build_balanced(n, max_rank=3, orders=(2,)),
            "times": (0.0, 0.8, 1.6, 2.4),
            "n_particles": agents(300),
        },
    }
    bin_summaries = {}
    for name, run in runs.items():
        rho0 = FiberedDensity.uniform(n_fibers, nx, x_min, x_max)
        series = solve(run["w"], kernels2, rho0, run["times"][-1],
                       snapshot_times=run["times"])
        for t, rho in zip(series.times, series.densities):
            plots.heatmap(rho.rho, emit(f"vlasov_{name}_t{t:g}.svg"),
                          title=f"{name} density at t={t:g}",
                          extent=(x_min, x_max, 0.0, 1.0))
        n_p = run["n_particles"]
        graph = run["graph"](n_p)
        x0 = sample_initial_uniform(n_p, seed, replica=0)
        traj = integrate(graph, kernels2, x0, run["times"][-1], dt)
        for t in run["times"]:
            states = traj.at_time(t)
            plots.particle_scatter(states, emit(f"particles_{name}_t{t:g}.svg"),
                                   title=f"{name} agents at t={t:g}", box=box)
            counts = plots.binned_density(states, emit(f"binned_{name}_t{t:g}.svg"),
                                          title=f"{name} bin counts at t={t:g}")
            bin_summaries[(name, t)] = int(counts.sum())

    # cross-N comparison of final homogeneous states
    for n_target in (100, 200, 400, 600):
        n_p = agents(n_target)
        graph = build_homogeneous(n_p, 0.1, max_rank=3, orders=(2,))
        x0 = sample_initial_uniform(n_p, seed, replica=0)
        traj = integrate(graph, kernels2, x0, 10.0, dt)
        plots.particle_scatter(traj.final, emit(f"particles_homogeneous_N{n_target}.svg"),
                               title=f"agents at t=10, target N={n_target}", box=box)

    write_csv(os.path.join(out_dir, "figures_manifest.csv"), resolved,
              ["file"], [(m,) for m in manifest], study="figures")
    return {"manifest": manifest, "bin_counts": bin_summaries}
