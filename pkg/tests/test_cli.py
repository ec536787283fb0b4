import csv
import json
import math
import subprocess
import sys
from importlib.resources import files

import numpy as np
import pytest

from lowscat.cli import main, read_trajectory

CONFIGS = files("lowscat") / "configs"


def write_cfg(tmp_path, cfg, name="run.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def run(cmd, cfg_path, out, *extra):
    return main([cmd, "--config", str(cfg_path), "--out", str(out), *extra])


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def test_generic_orbit_and_classification(tmp_path):
    out = tmp_path / "o"
    assert run("orbit", CONFIGS / "generic_orbit.json", out) == 0
    rep = json.loads((out / "asymptotics.json").read_text())
    assert rep["escaping"] and rep["energy_drift"] <= 1e-8
    header, data = read_csv(out / "trajectory.csv")
    assert header == ["t", "x1", "x2", "v1", "v2"] and data.shape == (3000, 5)
    # classify the file written by the orbit command
    cfg = {"potential": {"model": "coulomb", "gamma": 1.0}, "trajectory": str(out / "trajectory.csv"),
           "R0": 4.0, "sigma": 0.5}
    assert run("classify", write_cfg(tmp_path, cfg), tmp_path / "c") == 0
    res = json.loads((tmp_path / "c" / "classification.json").read_text())
    assert res["position_match"] <= 1e-4 and res["velocity_match"] <= 1e-4
    assert res["lambda"] == pytest.approx(0.3, rel=1e-8)


def test_runs_are_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert run("orbit", CONFIGS / "generic_orbit.json", tmp_path / d) == 0
    for name in ("trajectory.csv", "asymptotics.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_trajectory_file_round_trips_binary64(tmp_path):
    assert run("orbit", CONFIGS / "circular_orbit.json", tmp_path) == 0
    tr = read_trajectory(str(tmp_path / "trajectory.csv"))
    _, data = read_csv(tmp_path / "trajectory.csv")
    assert np.array_equal(tr.positions, data[:, 1:3])
    assert np.allclose(np.linalg.norm(tr.positions, axis=1), 5.0, rtol=1e-9)


def test_figure_orbit_csv(tmp_path):
    assert run("orbit", CONFIGS / "figure_orbit.json", tmp_path) == 0
    _, data = read_csv(tmp_path / "trajectory.csv")
    r = np.hypot(data[:, 1], data[:, 2])
    assert data.shape == (801, 5)
    assert r.min() == pytest.approx(r[400], rel=1e-12) and r.max() == pytest.approx(1e6, rel=1e-6)
    # the orbit winds: the polar angle changes by far more than pi
    ang = np.unwrap(np.arctan2(data[:, 2], data[:, 1]))
    assert abs(ang[-1] - ang[0]) > 3 * math.pi


def test_circular_orbit_cannot_be_classified(tmp_path):
    out = tmp_path / "c"
    assert run("classify", CONFIGS / "circular_orbit.json", out) == 3
    assert not out.exists() or not any(out.iterdir())


def test_phase_command(tmp_path):
    assert run("phase", CONFIGS / "coulomb_phase.json", tmp_path) == 0
    summary = json.loads((tmp_path / "phase.json").read_text())
    assert summary["max_relative_residual"] <= 1e-7
    header, data = read_csv(tmp_path / "phase.csv")
    assert header == ["x1", "x2", "phi", "gradphi1", "gradphi2", "residual"] and len(data) == 9
    r = np.hypot(data[:, 0], data[:, 1])
    exact = 2 * np.sqrt(r + data[:, 0]) - 2 * math.sqrt(8.0)
    assert np.allclose(data[:, 2], exact, atol=1e-9)


def test_threads_give_identical_output(tmp_path):
    assert run("phase", CONFIGS / "coulomb_phase.json", tmp_path / "a") == 0
    assert run("phase", CONFIGS / "coulomb_phase.json", tmp_path / "b", "--threads", "3") == 0
    assert (tmp_path / "a" / "phase.csv").read_bytes() == (tmp_path / "b" / "phase.csv").read_bytes()


def test_mixed_command_perturbed(tmp_path):
    assert run("mixed", CONFIGS / "perturbed_field.json", tmp_path) == 0
    header, data = read_csv(tmp_path / "fields.csv")
    assert header == ["x1", "x2", "omega1", "omega2", "lambda", "F1", "F2"] and len(data) == 2
    info = json.loads((tmp_path / "mixed.json").read_text())
    for p in info["points"]:
        assert abs(p["energy_defect"]) <= 1e-8


@pytest.mark.parametrize("suite,model,code", [
    ("radial_oracles", {"model": "coulomb", "gamma": 1.0}, 0),
    ("linforce", {"model": "coulomb", "gamma": 1.0}, 0),
    ("conditions", {"model": "power_law", "gamma": 1.0, "mu": 1.5}, 0),
    ("conditions", {"model": "power_law", "gamma": 1.0, "mu": 2.1}, 1),
])
def test_validate_suites(tmp_path, capsys, suite, model, code):
    cfg = write_cfg(tmp_path, {"potential": model})
    assert run("validate", cfg, tmp_path / "v", "--suite", suite) == code
    rep = json.loads((tmp_path / "v" / f"validate_{suite}.json").read_text())
    assert rep["pass"] == (code == 0)
    err = capsys.readouterr().err
    assert ("FAIL" in err) == (code == 1)


def test_probe_command(tmp_path):
    cfg = {"potential": {"model": "coulomb", "gamma": 1.0}, "omega": [1.0, 0.0], "quantity": "dF",
           "points": [[r, 0.2 * r] for r in (20.0, 200.0, 2000.0)]}
    assert run("probe", write_cfg(tmp_path, cfg), tmp_path) == 0
    res = json.loads((tmp_path / "probe_dF.json").read_text())
    assert res["fitted_exponent"] == pytest.approx(res["predicted_exponent"], abs=0.03)


@pytest.mark.parametrize("cfg", [
    {"potential": {"model": "power_law", "gamma": 1.0}},                       # missing mu
    {"potential": {"model": "yukawa"}},
    {"potential": {"model": "coulomb"}, "omega": [0.0, 0.0], "lam": 0.0, "R0": 4.0, "x": [9.0, 0.0]},
    {"potential": {"model": "coulomb"}, "omega": [1.0, 0.0], "lam": 0.0, "R0": 4.0, "x": [9.0, 0.0],
     "tol": -1.0},
])
def test_bad_configs_exit_2(tmp_path, cfg):
    assert run("phase", write_cfg(tmp_path, cfg), tmp_path / "x") == 2
    assert not (tmp_path / "x").exists()


def test_unreadable_config_and_bad_arguments(tmp_path):
    (tmp_path / "bad.json").write_text("{not json")
    assert run("orbit", tmp_path / "bad.json", tmp_path) == 2
    assert run("orbit", tmp_path / "missing.json", tmp_path) == 2
    assert main(["nosuch", "--config", "x"]) == 2
    assert run("validate", CONFIGS / "coulomb_phase.json", tmp_path, "--threads", "0") == 2


def test_point_outside_cone_is_numeric_or_config_error(tmp_path):
    cfg = {"potential": {"model": "coulomb"}, "omega": [1.0, 0.0], "lam": 0.0, "R0": 4.0,
           "x": [-20.0, 1.0]}
    assert run("phase", write_cfg(tmp_path, cfg), tmp_path / "x") == 2


def test_module_entry_point_keeps_data_off_stderr(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "lowscat", "phase", "--config",
                           str(CONFIGS / "coulomb_phase.json"), "--out", str(tmp_path)],
                          capture_output=True, text=True, timeout=300)
    assert proc.returncode == 0
    assert proc.stdout == ""
    assert all(line.startswith("wrote ") for line in proc.stderr.splitlines())
