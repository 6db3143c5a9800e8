"""Command-line driver.

Subcommands: simulate (particle trajectories), vlasov (fibered transport
solve), continuum (label-indexed characteristic ODE), distance (measure and
hypergraphon distances), convergence-study, cutdist-study, figures, and
validate.  Configuration is a flat `key = value` text file; `--seed`
overrides the config seed, `--out` picks the output directory, `--threads`
is accepted for interface compatibility (all computations run serially and
deterministically, so results never depend on it).

Exit codes: 0 success, 2 invalid parameters or failed validation, 3 resource
limits exceeded.
"""

import argparse
import os
import sys

import numpy as np

from . import config as cfgmod
from . import plots
from .errors import HypermfError, ParameterError, ValidationError
from .hypergraphon import step_from_hypergraph, load_step_hypergraphon
from .hypergraph import validate_hypergraph
from .kernels import check_assumption1
from .metrics import (DirectedHypertree, DiscreteMeasure, d_bl, d_p_nu,
                      d_square, delta_square_perm, fibered_atoms_from_density,
                      hypertree_moment, l1_level_distance,
                      operator_norm_infty_to_1, _common_step_levels)
from .particle import integrate, sample_initial_uniform
from .studies import (reproduce_figures, run_convergence_study,
                      run_cutdist_study, write_csv)
from .vlasov import (FiberedDensity, load_density, save_density, solve,
                     solve_continuum)


def _float(resolved, key):
    try:
        return float(resolved[key])
    except (KeyError, ValueError):
        raise ParameterError(f"config key {key!r} must be a number "
                             f"(got {resolved.get(key)!r})")


def _int(resolved, key):
    try:
        return int(resolved[key])
    except (KeyError, ValueError):
        raise ParameterError(f"config key {key!r} must be an integer "
                             f"(got {resolved.get(key)!r})")


def _float_list(resolved, key):
    raw = resolved.get(key, "").strip()
    if not raw:
        return ()
    try:
        return tuple(float(v) for v in raw.split(","))
    except ValueError:
        raise ParameterError(f"config key {key!r} must be comma-separated numbers")


def _int_list(resolved, key):
    raw = resolved.get(key, "").strip()
    if not raw:
        return ()
    try:
        return tuple(int(v) for v in raw.split(","))
    except ValueError:
        raise ParameterError(f"config key {key!r} must be comma-separated integers")


def _snapshot_times(resolved, t_final):
    times = _float_list(resolved, "snapshot_times")
    if not times:
        return (0.0, t_final)
    for t in times:
        if t < 0.0 or t > t_final + 1e-12:
            raise ParameterError(f"snapshot time {t} outside [0, {t_final}]")
    return times


def _resolved(args, extra_defaults):
    raw = cfgmod.load_config(args.config) if args.config else {}
    if args.seed is not None:
        raw["seed"] = str(args.seed)
    merged = dict(extra_defaults)
    merged.update(raw)
    return cfgmod.resolve(merged)


def _outdir(args):
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _box(resolved):
    lo, hi = _float(resolved, "x_min"), _float(resolved, "x_max")
    if not hi > lo:
        raise ParameterError("x_max must exceed x_min")
    return lo, hi


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args):
    resolved = _resolved(args, {
        "hypergraph": "homogeneous N=50 theta=0.1 max_rank=3",
        "kernels": "type=linear_mean order=2",
        "t_final": "1.0", "snapshot_times": "", "replica": "0",
    })
    out = _outdir(args)
    graph = cfgmod.build_hypergraph(resolved["hypergraph"])
    kernels = cfgmod.build_kernels(resolved["kernels"], box=_box(resolved))
    t_final = _float(resolved, "t_final")
    snaps = _snapshot_times(resolved, t_final)
    x0 = sample_initial_uniform(graph.num_nodes, _int(resolved, "seed"),
                                replica=_int(resolved, "replica"))
    traj = integrate(graph, kernels, x0, t_final, _float(resolved, "dt"),
                     method=resolved["method"])
    rows = []
    for t in snaps:
        states = traj.at_time(t)
        rows.extend((float(t), i + 1, float(x)) for i, x in enumerate(states))
        plots.particle_scatter(states, os.path.join(out, f"simulate_t{t:g}.svg"),
                               title=f"agents at t={t:g}", box=_box(resolved))
    write_csv(os.path.join(out, "trajectory.csv"), resolved, ["t", "i", "x"],
              rows, study="simulate")
    return 0


def _initial_density(resolved, n_fibers, nx, x_lo, x_hi):
    kind, params = cfgmod.parse_spec(resolved.get("initial", "uniform"))
    if kind == "uniform":
        lo = float(params.get("lo", 0.0))
        hi = float(params.get("hi", 1.0))
        return FiberedDensity.uniform(n_fibers, nx, x_lo, x_hi, support=(lo, hi))
    if kind == "gaussian":
        sigma = float(params.get("sigma", 0.1))
        if "center" in params:
            centers = np.full(n_fibers, float(params["center"]))
        else:
            centers = (np.arange(n_fibers) + 0.5) / n_fibers
        return FiberedDensity.gaussian(n_fibers, nx, centers, sigma, x_lo, x_hi)
    if kind == "file":
        return load_density(params["path"])
    raise ParameterError(f"unknown initial density kind {kind!r}")


def cmd_vlasov(args):
    resolved = _resolved(args, {
        "hypergraphon": "homogeneous theta=0.1 orders=1,2",
        "kernels": "type=linear_mean order=2",
        "t_final": "1.0", "snapshot_times": "", "initial": "uniform",
    })
    out = _outdir(args)
    w = cfgmod.build_hypergraphon(resolved["hypergraphon"])
    x_lo, x_hi = _box(resolved)
    kernels = cfgmod.build_kernels(resolved["kernels"], box=(x_lo, x_hi))
    t_final = _float(resolved, "t_final")
    snaps = _snapshot_times(resolved, t_final)
    rho0 = _initial_density(resolved, _int(resolved, "nxi"), _int(resolved, "nx"),
                            x_lo, x_hi)
    series = solve(w, kernels, rho0, t_final, snapshot_times=snaps,
                   dt_max=_float(resolved, "dt_max"), cfl=_float(resolved, "cfl"))
    rows = []
    for t, rho in zip(series.times, series.densities):
        for k in range(rho.n_fibers):
            rows.extend((float(t), k, j, float(v)) for j, v in enumerate(rho.rho[k]))
        plots.heatmap(rho.rho, os.path.join(out, f"vlasov_t{t:g}.svg"),
                      title=f"density at t={t:g}", extent=(x_lo, x_hi, 0.0, 1.0))
    write_csv(os.path.join(out, "density.csv"), resolved,
              ["t", "xi_index", "x_index", "rho"], rows, study="vlasov")
    save_density(series.densities[-1], os.path.join(out, "density_final.txt"))
    return 0


def cmd_continuum(args):
    resolved = _resolved(args, {
        "hypergraphon": "homogeneous theta=0.1 orders=1,2",
        "kernels": "type=linear_mean order=2",
        "t_final": "1.0", "snapshot_times": "", "profile": "identity",
    })
    out = _outdir(args)
    w = cfgmod.build_hypergraphon(resolved["hypergraphon"])
    kernels = cfgmod.build_kernels(resolved["kernels"], box=_box(resolved))
    t_final = _float(resolved, "t_final")
    snaps = _snapshot_times(resolved, t_final)
    kind, params = cfgmod.parse_spec(resolved["profile"])
    if kind == "identity":
        x0 = lambda xi: np.asarray(xi, dtype=np.float64)
    elif kind == "constant":
        value = float(params.get("value", 0.5))
        x0 = lambda xi: np.full_like(np.asarray(xi, dtype=np.float64), value)
    elif kind == "affine":
        a, b = float(params.get("a", 0.0)), float(params.get("b", 1.0))
        x0 = lambda xi: a + b * np.asarray(xi, dtype=np.float64)
    else:
        raise ParameterError(f"unknown continuum profile {kind!r}")
    traj = solve_continuum(w, kernels, x0, t_final, _float(resolved, "dt"),
                           n_fibers=_int(resolved, "nxi"))
    rows = []
    for t in snaps:
        idx = int(np.argmin(np.abs(np.asarray(traj.times) - t)))
        if abs(traj.times[idx] - t) > 1e-9:
            raise ParameterError(f"snapshot time {t} is not a step multiple")
        states = traj.values[idx]
        rows.extend((float(t), i + 1, float(x)) for i, x in enumerate(states))
        plots.particle_scatter(states, os.path.join(out, f"continuum_t{t:g}.svg"),
                               title=f"fiber states at t={t:g}", box=_box(resolved))
    write_csv(os.path.join(out, "continuum.csv"), resolved, ["t", "i", "x"],
              rows, study="continuum")
    return 0


def _measure_pair(resolved):
    for key in ("a", "b"):
        if key not in resolved:
            raise ParameterError(f"distance requires density file key {key!r}")
    return (fibered_atoms_from_density(load_density(resolved["a"])),
            fibered_atoms_from_density(load_density(resolved["b"])))


def _hypergraphon_pair(resolved):
    out = []
    for key in ("a", "b"):
        if key not in resolved:
            raise ParameterError(f"distance requires hypergraphon spec key {key!r}")
        kind, params = cfgmod.parse_spec(resolved[key])
        if kind == "hypergraph":
            out.append(step_from_hypergraph(cfgmod.build_hypergraph(
                "file path=" + params["path"])))
        else:
            out.append(cfgmod.build_hypergraphon(resolved[key]))
    return out


def _mix_fibers(atoms):
    positions = np.concatenate([f.positions for f in atoms.fibers])
    masses = np.concatenate([f.masses for f in atoms.fibers]) / atoms.n_fibers
    return DiscreteMeasure(positions, masses)


def cmd_distance(args):
    resolved = _resolved(args, {})
    out = _outdir(args)
    kind = resolved.get("kind")
    if kind is None:
        raise ParameterError("distance requires a 'kind' config key "
                             "(bl, dpnu, cut, opnorm, l1, delta-perm, hypertree)")
    rows = []
    if kind == "bl":
        mu, nu = _measure_pair(resolved)
        rows.append(("bl", 0, float(d_bl(_mix_fibers(mu), _mix_fibers(nu))), "exact"))
    elif kind == "dpnu":
        mu, nu = _measure_pair(resolved)
        rows.append(("dpnu", 0, float(d_p_nu(mu, nu, _float(resolved, "p"))), "exact"))
    elif kind == "cut":
        wa, wb = _hypergraphon_pair(resolved)
        result = d_square(wa, wb, seed=_int(resolved, "seed"))
        for order, value, mode, _ in result.per_order:
            rows.append(("cut", order, float(value), mode))
        total_mode = "exact" if all(m == "exact" for m in result.modes().values()) \
            else "heuristic"
        rows.append(("cut", 0, float(result.total), total_mode))
    elif kind == "opnorm":
        wa, wb = _hypergraphon_pair(resolved)
        _, diffs = _common_step_levels(wa, wb)
        for order, diff in diffs:
            rows.append(("opnorm", order, float(operator_norm_infty_to_1(diff)), "exact"))
    elif kind == "l1":
        wa, wb = _hypergraphon_pair(resolved)
        orders = _int_list(resolved, "orders") or sorted(
            set(wa.active_orders) | set(wb.active_orders))
        for order in orders:
            value = l1_level_distance(wa, wb, order,
                                      nodes_per_axis=_int(resolved, "nodes_per_axis")
                                      if "nodes_per_axis" in resolved else 8)
            rows.append(("l1", order, float(value), "exact"))
    elif kind == "delta-perm":
        wa, wb = _hypergraphon_pair(resolved)
        result = delta_square_perm(wa, wb)
        for order, value, mode, _ in result.result.per_order:
            rows.append(("delta-perm", order, float(value), mode))
        rows.append(("delta-perm", 0, float(result.total), "exact"))
    elif kind == "hypertree":
        if "a" not in resolved or "tree" not in resolved:
            raise ParameterError("hypertree needs 'a' (density file), 'tree', "
                                 "'hypergraphon', and 'exponents' keys")
        w = cfgmod.build_hypergraphon(
            resolved.get("hypergraphon", "constant value=1.0"))
        mu = fibered_atoms_from_density(load_density(resolved["a"]))
        edges = []
        for chunk in resolved["tree"].split(";"):
            chunk = chunk.strip()
            if not chunk:
                continue
            if ":" not in chunk:
                raise ParameterError(f"malformed hypertree edge {chunk!r} "
                                     "(expected tail:head,head)")
            tail, heads = chunk.split(":", 1)
            edges.append((int(tail), tuple(int(h) for h in heads.split(","))))
        num_nodes = 1 + sum(len(h) for _, h in edges)
        tree = DirectedHypertree(num_nodes, tuple(edges))
        exponents = _int_list(resolved, "exponents") or (0,) * num_nodes
        value = hypertree_moment(tree, w, mu, exponents)
        rows.append(("hypertree", num_nodes, float(value), "exact"))
    else:
        raise ParameterError(f"unknown distance kind {kind!r}")
    write_csv(os.path.join(out, "distance.csv"), resolved,
              ["kind", "order", "value", "mode"], rows, study="distance")
    for row in rows:
        print(",".join(str(c) for c in row))
    return 0


def cmd_convergence_study(args):
    resolved = _resolved(args, {
        "n_list": "50,100,200,400", "theta": "0.1", "t_final": "1.0",
        "snapshot_times": "0,0.5,1",
    })
    run_convergence_study(
        _outdir(args),
        n_list=_int_list(resolved, "n_list"),
        replicas=_int(resolved, "replicas"),
        p=_float(resolved, "p"),
        theta=_float(resolved, "theta"),
        t_final=_float(resolved, "t_final"),
        snapshot_times=_snapshot_times(resolved, _float(resolved, "t_final")),
        dt=_float(resolved, "dt"),
        n_fibers=_int(resolved, "nxi"),
        nx=_int(resolved, "nx"),
        x_min=_float(resolved, "x_min"),
        x_max=_float(resolved, "x_max"),
        compare_fibers=_int(resolved, "compare_fibers"),
        seed=_int(resolved, "seed"))
    return 0


def cmd_cutdist_study(args):
    resolved = _resolved(args, {
        "n_list": "10,20,40,80", "theta": "0.1", "orders": "1,2",
        "nodes_per_axis": "8", "include_cut": "true",
    })
    run_cutdist_study(
        _outdir(args),
        n_list=_int_list(resolved, "n_list"),
        theta=_float(resolved, "theta"),
        orders=_int_list(resolved, "orders"),
        nodes_per_axis=_int(resolved, "nodes_per_axis"),
        seed=_int(resolved, "seed"),
        include_cut=resolved["include_cut"].lower() in ("1", "true", "yes"))
    return 0


def cmd_figures(args):
    resolved = _resolved(args, {"scale": "1.0", "dt": "0.02"})
    reproduce_figures(
        _outdir(args),
        scale=_float(resolved, "scale"),
        seed=_int(resolved, "seed"),
        dt=_float(resolved, "dt"),
        nx=_int(resolved, "nx"),
        n_fibers=_int(resolved, "nxi"),
        x_min=_float(resolved, "x_min"),
        x_max=_float(resolved, "x_max"))
    return 0


def cmd_validate(args):
    resolved = _resolved(args, {})
    problems = []

    def note(ok, label, detail=""):
        status = "ok" if ok else "invalid"
        print(f"{status}: {label}" + (f" ({detail})" if detail else ""))
        if not ok:
            problems.append(label)

    if "hypergraph" in resolved:
        graph = cfgmod.build_hypergraph(resolved["hypergraph"])
        report = validate_hypergraph(graph)
        note(report.ok, "hypergraph",
             f"N={graph.num_nodes}, orders={list(graph.orders)}" if report.ok
             else f"{len(report.loop_violations)} loop, "
                  f"{len(report.head_symmetry_violations)} head-symmetry, "
                  f"{len(report.full_symmetry_violations)} full-symmetry violations")
    if "hypergraphon" in resolved:
        w = cfgmod.build_hypergraphon(resolved["hypergraphon"])
        note(True, "hypergraphon", f"orders={sorted(w.active_orders)}")
    if "kernels" in resolved:
        kernels = cfgmod.build_kernels(resolved["kernels"], box=_box(resolved))
        eta = float(resolved.get("eta", "1.0"))
        report = check_assumption1(kernels, eta, seed=_int(resolved, "seed"))
        note(report.ok, "kernels",
             f"series_bound={report.series_bound:.6g}, "
             f"series_lipschitz={report.series_lipschitz:.6g}" if report.ok
             else f"{len(report.bound_violations)} bound, "
                  f"{len(report.lipschitz_violations)} lipschitz, "
                  f"{len(report.head_symmetry_violations)} symmetry violations")
    if "t_final" in resolved:
        t_final = _float(resolved, "t_final")
        try:
            _snapshot_times(resolved, t_final)
            note(True, "snapshot_times")
        except ParameterError as exc:
            note(False, "snapshot_times", str(exc))
    if problems:
        raise ValidationError("validation failed: " + ", ".join(problems))
    print("all checks passed")
    return 0


# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hypermf",
        description="Higher-order interacting particle systems, their "
                    "fibered transport limits, and convergence diagnostics.")
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "simulate": (cmd_simulate, "integrate a finite particle system"),
        "vlasov": (cmd_vlasov, "solve the fibered transport equation"),
        "continuum": (cmd_continuum, "solve the label-indexed Dirac ODE"),
        "distance": (cmd_distance, "measure/hypergraphon distances"),
        "convergence-study": (cmd_convergence_study,
                              "particle-vs-limit distance sweep over N"),
        "cutdist-study": (cmd_cutdist_study,
                          "discretization L1/cut-norm distances over N"),
        "figures": (cmd_figures, "reproduce the qualitative figure set"),
        "validate": (cmd_validate, "check a configuration and its objects"),
    }
    for name, (fn, help_text) in commands.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", default=None,
                        help="flat key = value config file")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
        sp.add_argument("--threads", type=int, default=1,
                        help="worker hint; execution is serial and "
                             "deterministic regardless")
        sp.set_defaults(fn=fn)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except HypermfError as exc:
        print(f"hypermf: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"hypermf: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
