import numpy as np
import pytest

import hypermf as hm
from hypermf.cli import main


def write_cfg(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_lines(path):
    with open(path) as fh:
        return fh.read().splitlines()


# ---------------------------------------------------------------------------
# simulate


def test_simulate_outputs_and_schema(tmp_path):
    cfg = write_cfg(tmp_path, "sim.cfg",
                    "hypergraph = homogeneous N=12 theta=0.3 max_rank=2\n"
                    "kernels = order=1 type=linear_mean\n"
                    "t_final = 0.2\nsnapshot_times = 0,0.2\n")
    out = tmp_path / "run"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
    lines = read_lines(out / "trajectory.csv")
    assert lines[0].startswith("# config_sha256=")
    assert lines[1] == "# study=simulate"
    assert lines[2] == "t,i,x"
    body = [ln.split(",") for ln in lines[3:]]
    assert len(body) == 2 * 12
    assert {row[0] for row in body} == {"0.0", "0.2"}
    assert [int(r[1]) for r in body[:12]] == list(range(1, 13))
    assert (out / "simulate_t0.svg").exists()
    assert (out / "simulate_t0.2.svg").exists()


def test_simulate_reruns_byte_identical(tmp_path):
    cfg = write_cfg(tmp_path, "sim.cfg",
                    "hypergraph = homogeneous N=10 theta=0.3 max_rank=2\n"
                    "kernels = order=1 type=linear_mean\nt_final = 0.1\n")
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", cfg, "--out", str(out_a), "--seed", "5"]) == 0
    assert main(["simulate", "--config", cfg, "--out", str(out_b), "--seed", "5"]) == 0
    for name in ("trajectory.csv", "simulate_t0.svg", "simulate_t0.1.svg"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_simulate_seed_changes_output(tmp_path):
    cfg = write_cfg(tmp_path, "sim.cfg", "t_final = 0.1\n"
                    "hypergraph = homogeneous N=10 theta=0.3 max_rank=2\n"
                    "kernels = order=1 type=linear_mean\n")
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    main(["simulate", "--config", cfg, "--out", str(out_a), "--seed", "1"])
    main(["simulate", "--config", cfg, "--out", str(out_b), "--seed", "2"])
    assert (out_a / "trajectory.csv").read_bytes() != (out_b / "trajectory.csv").read_bytes()


# ---------------------------------------------------------------------------
# vlasov / continuum


def test_vlasov_outputs(tmp_path):
    cfg = write_cfg(tmp_path, "v.cfg",
                    "hypergraphon = homogeneous theta=0.3 orders=1\n"
                    "kernels = order=1 type=linear_mean\n"
                    "t_final = 0.2\nsnapshot_times = 0,0.2\nnx = 32\nnxi = 8\n")
    out = tmp_path / "v"
    assert main(["vlasov", "--config", cfg, "--out", str(out)]) == 0
    lines = read_lines(out / "density.csv")
    assert lines[2] == "t,xi_index,x_index,rho"
    assert (out / "vlasov_t0.svg").exists()
    assert (out / "vlasov_t0.2.svg").exists()
    header = read_lines(out / "density_final.txt")[0]
    assert header == "density v1 nx=32 nxi=8 xmin=-0.1 xmax=1.1"
    rho = hm.load_density(out / "density_final.txt")
    assert np.allclose(rho.mass_per_fiber(), 1.0, atol=1e-9)


def test_continuum_identity_profile(tmp_path):
    cfg = write_cfg(tmp_path, "c.cfg",
                    "hypergraphon = constant value=1.0 orders=1\n"
                    "kernels = order=1 type=linear_mean\n"
                    "profile = identity\nt_final = 1.0\nsnapshot_times = 0,1\n"
                    "nxi = 16\n")
    out = tmp_path / "c"
    assert main(["continuum", "--config", cfg, "--out", str(out)]) == 0
    lines = read_lines(out / "continuum.csv")
    assert lines[2] == "t,i,x"
    final = {int(r[1]): float(r[2]) for r in
             (ln.split(",") for ln in lines[3:]) if float(r[0]) == 1.0}
    mids = (np.arange(16) + 0.5) / 16
    for i, xi in enumerate(mids, start=1):
        assert final[i] == pytest.approx(0.5 + (xi - 0.5) * np.exp(-1.0), abs=1e-4)


# ---------------------------------------------------------------------------
# distance


def density_file(tmp_path, name, support):
    rho = hm.FiberedDensity.uniform(4, 64, -0.1, 1.1, support=support)
    path = tmp_path / name
    hm.save_density(rho, path)
    return str(path)


def test_distance_bl_and_dpnu(tmp_path, capsys):
    a = density_file(tmp_path, "a.txt", (0.0, 0.5))
    b = density_file(tmp_path, "b.txt", (0.5, 1.0))
    cfg = write_cfg(tmp_path, "d.cfg", f"kind = bl\na = {a}\nb = {b}\np = 1\n")
    out = tmp_path / "d"
    assert main(["distance", "--config", cfg, "--out", str(out)]) == 0
    printed = capsys.readouterr().out.strip().splitlines()
    kind, order, value, mode = printed[-1].split(",")
    assert kind == "bl" and mode == "exact"
    # shift by 1/2, Lipschitz test saturates; slack covers grid quantization
    assert float(value) == pytest.approx(0.5, abs=1e-3)
    lines = read_lines(out / "distance.csv")
    assert lines[2] == "kind,order,value,mode"

    cfg2 = write_cfg(tmp_path, "d2.cfg", f"kind = dpnu\na = {a}\nb = {b}\np = 1\n")
    assert main(["distance", "--config", cfg2, "--out", str(out)]) == 0
    value = float(capsys.readouterr().out.strip().split(",")[2])
    assert value == pytest.approx(0.5, abs=1e-3)


def step_file(tmp_path, name, theta, n=6, max_rank=2):
    H = hm.build_homogeneous(n, theta, max_rank)
    step = hm.step_from_hypergraph(H)
    path = tmp_path / name
    hm.save_step_hypergraphon(step, path)
    return str(path)


def test_distance_cut_and_l1(tmp_path, capsys):
    a = step_file(tmp_path, "wa.txt", 0.2)
    b = step_file(tmp_path, "wb.txt", 0.6)
    cfg = write_cfg(tmp_path, "cut.cfg", f"kind = cut\na = file path={a}\n"
                    f"b = file path={b}\n")
    out = tmp_path / "cut"
    assert main(["distance", "--config", cfg, "--out", str(out)]) == 0
    rows = [ln.split(",") for ln in capsys.readouterr().out.strip().splitlines()]
    by_order = {int(r[1]): float(r[2]) for r in rows}
    assert by_order[1] > 0.0
    assert by_order[0] == pytest.approx(0.5 * by_order[1], abs=1e-12)  # orders=(1,)
    assert all(r[3] == "exact" for r in rows)

    cfg2 = write_cfg(tmp_path, "l1.cfg", f"kind = l1\na = file path={a}\n"
                     f"b = file path={b}\norders = 1\n")
    assert main(["distance", "--config", cfg2, "--out", str(out)]) == 0
    row = capsys.readouterr().out.strip().split(",")
    assert row[0] == "l1" and float(row[2]) > 0.0


def test_distance_hypergraph_spec_matches_file(tmp_path, capsys):
    # 'hypergraph path=' specs lift the finite object before comparing
    H = hm.build_homogeneous(5, 0.4, 2)
    hpath = tmp_path / "h.txt"
    hm.save_hypergraph(H, hpath)
    spath = step_file(tmp_path, "s.txt", 0.4, n=5)
    cfg = write_cfg(tmp_path, "eq.cfg", f"kind = cut\na = hypergraph path={hpath}\n"
                    f"b = file path={spath}\n")
    assert main(["distance", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    rows = [ln.split(",") for ln in capsys.readouterr().out.strip().splitlines()]
    assert all(float(r[2]) == 0.0 for r in rows)


def test_distance_unknown_kind_exit_2(tmp_path):
    cfg = write_cfg(tmp_path, "bad.cfg", "kind = warp\n")
    assert main(["distance", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_distance_opnorm_budget_exit_3(tmp_path):
    # exact cut-norm enumeration refuses 25-part matrices
    a = step_file(tmp_path, "big_a.txt", 0.2, n=25, max_rank=2)
    b = step_file(tmp_path, "big_b.txt", 0.6, n=25, max_rank=2)
    cfg = write_cfg(tmp_path, "op.cfg", f"kind = opnorm\na = file path={a}\n"
                    f"b = file path={b}\n")
    assert main(["distance", "--config", cfg, "--out", str(tmp_path / "o")]) == 3


def test_missing_config_file_exit_2(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "nope.cfg"),
                 "--out", str(tmp_path / "o")]) == 2


# ---------------------------------------------------------------------------
# validate


def test_validate_ok(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "v.cfg",
                    "hypergraph = homogeneous N=10 theta=0.3 max_rank=2\n"
                    "kernels = order=1 type=linear_mean\n")
    assert main(["validate", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    text = capsys.readouterr().out
    assert "ok:" in text and "invalid:" not in text


def test_validate_flags_bad_snapshots(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "v.cfg",
                    "hypergraph = homogeneous N=10 theta=0.3 max_rank=2\n"
                    "kernels = order=1 type=linear_mean\n"
                    "t_final = 1.0\nsnapshot_times = 0,2\n")
    assert main(["validate", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "invalid:" in capsys.readouterr().out


# ---------------------------------------------------------------------------
# parser plumbing


def test_unknown_subcommand_rejected(capsys):
    with pytest.raises(SystemExit):
        main(["teleport"])


def test_threads_flag_accepted(tmp_path):
    cfg = write_cfg(tmp_path, "s.cfg",
                    "hypergraph = homogeneous N=8 theta=0.3 max_rank=2\n"
                    "kernels = order=1 type=linear_mean\nt_final = 0.1\n")
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "o"),
                 "--threads", "2"]) == 0
