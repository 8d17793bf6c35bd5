"""Command-line interface: subcommands, outputs, exit codes."""

import json

import numpy as np
import pytest

from robest.cli import main
from robest.g2o import write_g2o
from robest.generators import gen_grid_2d

RUN_CONFIG = {
    "problem": {"kind": "linear", "m": 10, "n": 1, "noise_sigma": 0.05},
    "algorithms": [{"name": "gnc"}],
    "outlier_rates": [0.0, 0.2],
    "trials": 2,
    "base_seed": 3,
}


def _write_config(tmp_path, payload):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(payload))
    return str(path)


def test_generate_writes_npz(tmp_path, capsys):
    cfg = _write_config(tmp_path, {
        "problem": {"kind": "linear", "m": 8, "n": 1, "noise_sigma": 0.05},
        "outlier_rate": 0.25,
    })
    code = main(["generate", "--config", cfg, "--out", str(tmp_path / "out")])
    assert code == 0
    data = np.load(tmp_path / "out" / "instance.npz")
    assert data["y"].shape == (8,)
    assert data["outlier_labels"].sum() == 2
    assert "instance.npz" in capsys.readouterr().out


def test_generate_writes_g2o(tmp_path):
    cfg = _write_config(tmp_path, {
        "problem": {"kind": "grid2d", "rows": 2, "cols": 3,
                    "noise_sigma_t": 0.01, "noise_sigma_r": 0.01,
                    "loop_closure_prob": 0.5},
    })
    code = main(["generate", "--config", cfg, "--out", str(tmp_path / "out")])
    assert code == 0
    text = (tmp_path / "out" / "instance.g2o").read_text()
    assert text.startswith("VERTEX_SE2 0 ")


def test_generate_is_seed_repeatable(tmp_path):
    cfg = _write_config(tmp_path, {
        "problem": {"kind": "linear", "m": 8, "n": 1, "noise_sigma": 0.05}})
    main(["generate", "--config", cfg, "--seed", "5",
          "--out", str(tmp_path / "a")])
    main(["generate", "--config", cfg, "--seed", "5",
          "--out", str(tmp_path / "b")])
    a = np.load(tmp_path / "a" / "instance.npz")
    b = np.load(tmp_path / "b" / "instance.npz")
    np.testing.assert_array_equal(a["y"], b["y"])


def test_run_writes_results(tmp_path, capsys):
    cfg = _write_config(tmp_path, RUN_CONFIG)
    code = main(["run", "--config", cfg, "--out", str(tmp_path / "out")])
    assert code == 0
    lines = (tmp_path / "out" / "results.csv").read_text().splitlines()
    assert len(lines) == 1 + 1 * 2 * 2
    assert (tmp_path / "out" / "summary.json").exists()
    assert "results.csv" in capsys.readouterr().out


def test_bounds_reports_loops(tmp_path, capsys):
    graph = gen_grid_2d(2, 3, 0.01, 0.01, 0.8, seed=0).problem
    path = tmp_path / "g.g2o"
    path.write_text(write_g2o(graph))
    code = main(["bounds", str(path), "--out", str(tmp_path / "out")])
    assert code == 0
    out = capsys.readouterr().out
    assert "loop" in out and "multiplicity" in out
    payload = json.loads((tmp_path / "out" / "bounds.json").read_text())
    assert len(payload["bounds"]) == len(graph.loop_closures)
    assert len(payload["multiplicities"]) == len(graph.odometry)


def test_config_errors_exit_2(tmp_path, capsys):
    bad = _write_config(tmp_path, dict(RUN_CONFIG,
                                       problem={"kind": "mystery"}))
    assert main(["run", "--config", bad, "--out", str(tmp_path / "o")]) == 2
    assert "problem.kind" in capsys.readouterr().err

    missing = str(tmp_path / "absent.json")
    assert main(["run", "--config", missing, "--out", str(tmp_path / "o")]) == 2

    (tmp_path / "broken.json").write_text("{not json")
    assert main(["run", "--config", str(tmp_path / "broken.json"),
                 "--out", str(tmp_path / "o")]) == 2


def test_runtime_errors_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.g2o"
    bad.write_text("VERTEX_SE2 0 0 0\n")
    assert main(["bounds", str(bad)]) == 1
    assert "line 1" in capsys.readouterr().err


def test_verify_passes_on_default_seed(capsys):
    code = main(["verify", "--seed", "0"])
    out = capsys.readouterr().out
    assert code == 0, out
    lines = [l for l in out.splitlines() if l]
    assert len(lines) == 3
    assert all(l.startswith("PASS") for l in lines)
