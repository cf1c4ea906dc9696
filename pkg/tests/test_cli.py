import json

import numpy as np
import pytest

from mcflab.cli import main
from mcflab.fields import Grid, field_from_function, write_field_csv


def test_unknown_subcommand_exits_2(capsys):
    assert main(["frobnicate"]) == 2


def test_no_subcommand_exits_2(capsys):
    assert main([]) == 2


def test_simulate_radial_happy_path(tmp_path, capsys):
    cfg = tmp_path / "cfg.toml"
    cfg.write_text(
        'n = 2\neps = 0.05\nr0 = 1.0\nM = 128\nT = 0.01\ndt = 2e-4\n'
    )
    out = tmp_path / "run"
    code = main(["simulate-radial", "--config", str(cfg), "--out", str(out)])
    assert code == 0
    assert (out / "trajectory.csv").exists()
    man = json.loads((out / "manifest.json").read_text())
    assert man["command"] == "simulate-radial"
    assert man["status"] == "ok"
    assert "trajectory.csv" in man["outputs"]


def test_unknown_config_key_exits_2(tmp_path, capsys):
    cfg = tmp_path / "cfg.toml"
    cfg.write_text("epsilon = 0.05\n")  # misspelled key
    code = main(["simulate-radial", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert code == 2
    assert "unknown" in capsys.readouterr().err


def test_missing_config_exits_2(tmp_path):
    code = main(["simulate-radial", "--config", str(tmp_path / "nope.toml"),
                 "--out", str(tmp_path / "o")])
    assert code == 2


def test_json_config_accepted(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 2, "eps": 0.05, "r0": 1.0, "M": 128,
                               "T": 0.005, "dt": 2e-4}))
    assert main(["simulate-radial", "--config", str(cfg),
                 "--out", str(tmp_path / "run")]) == 0


def test_diagnose_manufactured_pair(tmp_path, capsys):
    g = Grid(2, (0.0, 0.0), 1.0 / 32, (33, 33))
    u = field_from_function(
        g, lambda p: np.sin(p[..., 0]) * np.cos(p[..., 1]) + 2 * p[..., 0]
    )
    ut = field_from_function(
        g, lambda p: -2.0 * np.sin(p[..., 0]) * np.cos(p[..., 1])
    )
    write_field_csv(u, tmp_path / "u.csv")
    write_field_csv(ut, tmp_path / "ut.csv")
    out = tmp_path / "diag"
    code = main([
        "diagnose", "--field", str(tmp_path / "u.csv"),
        "--ut", str(tmp_path / "ut.csv"), "--out", str(out),
    ])
    assert code == 0
    printed = capsys.readouterr().out
    assert "sup|r|" in printed
    assert (out / "residual.csv").exists()
    header = (out / "residual.csv").read_text().splitlines()[0]
    assert header == "x1,x2,r"


def test_levelset_check(tmp_path, capsys):
    out = tmp_path / "ls"
    code = main(["levelset-check", "--out", str(out), "--assert"])
    assert code == 0
    rep = json.loads((out / "levelset_report.json").read_text())
    assert rep["hmcf_residual"] < 1e-6
    assert rep["level_preservation_error"] < 1e-7
    assert (out / "path.csv").exists()


def test_variation_check_delta2(tmp_path, capsys):
    out = tmp_path / "var"
    code = main(["variation-check", "--out", str(out), "--assert"])
    assert code == 0
    rep = json.loads((out / "variation_report.json").read_text())
    assert rep["rel_gap"] < 1e-3
    assert set(rep) == {
        "delta", "eps", "analytic", "fd", "rel_gap", "boundary_term", "bulk_term"
    }


def test_variation_check_delta0(tmp_path):
    cfg = tmp_path / "cfg.toml"
    cfg.write_text("delta = 0.0\neps = 0.1\n")
    out = tmp_path / "var0"
    code = main(["variation-check", "--config", str(cfg), "--out", str(out),
                 "--assert"])
    assert code == 0
    rep = json.loads((out / "variation_report.json").read_text())
    assert rep["rel_gap"] < 1e-2
    assert rep["boundary_term"] != 0.0


def test_sweep_gate_failure_still_writes_outputs(tmp_path, capsys):
    cfg = tmp_path / "sweep.toml"
    cfg.write_text(
        "eps_list = [0.1, 0.05, 0.025]\nr0 = 2.5\nT = 0.05\nM = 128\ndt = 5e-4\n"
        "[assert]\nsup_grad_phi_slope_min = 99.0\n"  # unsatisfiable window
    )
    out = tmp_path / "sw"
    code = main(["sweep", "--config", str(cfg), "--out", str(out), "--assert"])
    assert code == 4
    run_dirs = [p for p in out.iterdir() if p.is_dir()]
    assert len(run_dirs) == 1
    assert (run_dirs[0] / "fits.json").exists()
    assert (run_dirs[0] / "sweep.csv").exists()


def test_sweep_then_report(tmp_path, capsys):
    cfg = tmp_path / "sweep.toml"
    cfg.write_text(
        "eps_list = [0.1, 0.05, 0.025]\nr0 = 2.5\nT = 0.05\nM = 128\ndt = 5e-4\n"
    )
    out = tmp_path / "sw"
    assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    run_dir = next(p for p in out.iterdir() if p.is_dir())
    rep_out = tmp_path / "rep"
    assert main(["report", "--run", str(run_dir), "--out", str(rep_out)]) == 0
    text = (rep_out / "report.md").read_text()
    assert "Sweep report" in text
    assert "slope" in text


def test_simulate_2d_smoke(tmp_path):
    cfg = tmp_path / "cfg.toml"
    cfg.write_text(
        'curve = "circle"\nr0 = 1.0\neps = 0.1\nh = 0.025\nbox = 1.3\n'
        "T = 0.002\nrecord_every = 10\n"
    )
    out = tmp_path / "g2"
    code = main(["simulate-2d", "--config", str(cfg), "--out", str(out)])
    assert code == 0
    assert (out / "area_history.csv").exists()
    assert (out / "final_contour.csv").exists()
    man = json.loads((out / "manifest.json").read_text())
    assert man["command"] == "simulate-2d"


def test_deterministic_sweep_outputs(tmp_path):
    cfg = tmp_path / "sweep.toml"
    cfg.write_text(
        "eps_list = [0.1, 0.05, 0.025]\nr0 = 2.5\nT = 0.02\nM = 128\ndt = 5e-4\n"
    )
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
        run_dir = next(p for p in out.iterdir() if p.is_dir())
        outs.append((run_dir / "sweep.csv").read_text().splitlines())
    # identical bytes apart from the runtime_s column
    for row_a, row_b in zip(*outs):
        cols_a = row_a.split(",")
        cols_b = row_b.split(",")
        del cols_a[8], cols_b[8]
        assert cols_a == cols_b
