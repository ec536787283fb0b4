"""Command-line front end.

    lowscat SUBCOMMAND --config run.json [--out DIR] [--suite NAME] [--threads N]

Subcommands: orbit, mixed, phase, classify, validate, probe.  One JSON
config describes one run; outputs are CSV/JSON files in ``--out``.  Exit
codes: 0 success, 1 a validation suite ran but failed, 2 invalid
configuration, 3 numerical failure.  Messages go to standard error, data
only to files.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import (as_field, energy_drift, free_potential, integrate_newton, omega_plus,
                          virial_check)
from .eikonal import FieldEvaluator, classify_orbit, cone_grid, eikonal_residual
from .errors import ConfigError, LowscatError, NumericalError
from .linforce import log_grid
from .perturbed import BOUND_QUANTITIES, bound_probe, solve_mixed_perturbed
from .potentials import (Perturbation, RadialPotential, TotalPotential, anisotropic_power, coulomb,
                         power_law, power_law_short_range, zero_perturbation)
from .radial import ScatteringData, Trajectory, apse_orbit, normalize_direction
from .suites import SUITES, run_suite

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
COMMANDS = ("orbit", "mixed", "phase", "classify", "validate", "probe")


def fmt(v: float) -> str:
    """17 significant digits: binary64 values survive the round trip."""
    return format(float(v), ".17g")


# ----------------------------------------------------------------------------
# configuration
# ----------------------------------------------------------------------------

_POTENTIALS = {
    "power_law": (power_law, ("gamma", "mu"), ("eps1", "eps1_tilde")),
    "coulomb": (coulomb, (), ("gamma",)),
    "power_law_short_range": (power_law_short_range, ("gamma", "mu", "beta", "nu"), ()),
}


def _number(cfg: dict, key: str, default=None, positive: bool = False) -> float:
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return float(default)
    v = cfg[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{key!r} must be a finite number")
    if positive and not v > 0:
        raise ConfigError(f"{key!r} must be positive")
    return float(v)


def _vector(cfg: dict, key: str, default=None) -> np.ndarray:
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return np.asarray(default, dtype=float)
    v = cfg[key]
    if not isinstance(v, list) or len(v) < 2 or not all(
            isinstance(c, (int, float)) and not isinstance(c, bool) for c in v):
        raise ConfigError(f"{key!r} must be a list of at least two numbers")
    arr = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{key!r} must be finite")
    return arr


def _direction(cfg: dict, key: str = "omega") -> np.ndarray:
    return normalize_direction(_vector(cfg, key))


def build_potential(spec) -> RadialPotential | None:
    """Radial part from {"model": ..., params}; the "free" model returns None."""
    if not isinstance(spec, dict) or "model" not in spec:
        raise ConfigError("'potential' must be an object with a 'model' key")
    model = spec["model"]
    if model == "free":
        return None
    if model not in _POTENTIALS:
        raise ConfigError(f"unknown potential model {model!r}; choose from "
                          f"{sorted(_POTENTIALS) + ['free']}")
    fn, required, optional = _POTENTIALS[model]
    extra = set(spec) - {"model", *required, *optional}
    if extra:
        raise ConfigError(f"unknown potential keys {sorted(extra)}")
    args = [_number(spec, k) for k in required]
    kw = {k: _number(spec, k) for k in optional if k in spec}
    return fn(*args, **kw)


def build_perturbation(spec, pot: RadialPotential | None) -> Perturbation | None:
    if spec is None:
        return None
    if not isinstance(spec, dict) or "model" not in spec:
        raise ConfigError("'perturbation' must be null or an object with a 'model' key")
    if spec["model"] == "zero":
        return None
    if spec["model"] != "anisotropic_power":
        raise ConfigError(f"unknown perturbation model {spec['model']!r}")
    extra = set(spec) - {"model", "strength", "eps2", "mu", "direction"}
    if extra:
        raise ConfigError(f"unknown perturbation keys {sorted(extra)}")
    mu = _number(spec, "mu", pot.mu if pot is not None else None)
    direction = _vector(spec, "direction", [1.0, 0.0])
    return anisotropic_power(_number(spec, "strength"), _number(spec, "eps2", positive=True), mu,
                             direction)


def _check_tolerances(cfg: dict):
    for k, v in cfg.items():
        if (k == "tol" or k.endswith("_tol")) and not (
                isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0):
            raise ConfigError(f"tolerance {k!r} must be positive")


def load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    if "potential" not in cfg:
        raise ConfigError("config needs a 'potential' entry")
    _check_tolerances(cfg)
    cfg["_dir"] = str(Path(path).resolve().parent)
    return cfg


def _require_radial(pot):
    if pot is None:
        raise ConfigError("this command needs a radial potential (not 'free')")
    return pot


# ----------------------------------------------------------------------------
# file formats
# ----------------------------------------------------------------------------

def trajectory_rows(traj: Trajectory):
    d = traj.dim
    header = ["t"] + [f"x{i + 1}" for i in range(d)] + [f"v{i + 1}" for i in range(d)]
    rows = [[fmt(t), *map(fmt, x), *map(fmt, v)]
            for t, x, v in zip(traj.times, traj.positions, traj.velocities)]
    return header, rows


def read_trajectory(path: str) -> Trajectory:
    """Trajectory CSV with header t,x1..xd,v1..vd (as written by the orbit command)."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            data = np.array([[float(c) for c in row] for row in reader if row])
    except (OSError, StopIteration, ValueError) as exc:
        raise ConfigError(f"cannot read trajectory {path!r}: {exc}") from exc
    d = (len(header) - 1) // 2
    if header[0] != "t" or len(header) != 2 * d + 1 or d < 2 or data.ndim != 2:
        raise ConfigError(f"{path!r} is not a trajectory CSV")
    return Trajectory(data[:, 0], data[:, 1:1 + d], data[:, 1 + d:], math.nan)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default, allow_nan=True) + "\n"


class Outputs:
    """Collects files and writes them only once the command has succeeded."""

    def __init__(self, out_dir: str):
        self.dir = Path(out_dir)
        self.files: dict[str, str] = {}

    def csv(self, name: str, header, rows):
        self.files[name] = _csv_text(header, rows)

    def json(self, name: str, obj):
        self.files[name] = _json_text(obj)

    def flush(self):
        self.dir.mkdir(parents=True, exist_ok=True)
        for name, text in self.files.items():
            (self.dir / name).write_text(text, encoding="utf-8")
        return sorted(self.files)


# ----------------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------------

def _initial_orbit(cfg: dict, pot, pert) -> Trajectory:
    x0 = _vector(cfg, "x0")
    V = free_potential() if pot is None else as_field(pot, pert)
    if "v0" in cfg:
        v0 = _vector(cfg, "v0")
    else:
        lam = _number(cfg, "lam")
        d = normalize_direction(_vector(cfg, "direction"))
        kin = lam - float(V.value(x0))
        if kin < 0:
            raise ConfigError("energy below the potential at x0")
        v0 = math.sqrt(2.0 * kin) * d
    t_end = _number(cfg, "t_end", positive=True)
    n = int(_number(cfg, "n_samples", 1000, positive=True))
    tol = _number(cfg, "tol", 1e-10)
    if cfg.get("sampling", "log") == "linear":
        te = np.linspace(0.0, t_end, n)
    else:
        te = np.concatenate(([0.0], np.geomspace(t_end * 1e-6, t_end, n - 1)))
    return integrate_newton(V, x0, v0, (0.0, t_end), tol=tol, t_eval=te)


def _orbit_trajectory(cfg: dict, pot, pert):
    problem = cfg.get("problem", "initial")
    if problem == "initial":
        return _initial_orbit(cfg, pot, pert)
    pot = _require_radial(pot)
    if problem == "mixed":
        data = ScatteringData(_vector(cfg, "x"), _direction(cfg), _number(cfg, "lam"))
        grid = log_grid(_number(cfg, "t_max", 1e4), int(_number(cfg, "n_samples", 400)))
        _, y, _, _ = solve_mixed_perturbed(pot, pert, data, grid=grid)
        return y
    if problem == "apse":
        if pert is not None and not pert.is_zero:
            raise ConfigError("the apse orbit is defined for radial potentials only")
        return apse_orbit(pot, _number(cfg, "lam", 0.0), _number(cfg, "L"),
                          _number(cfg, "r_max", 1e6, positive=True),
                          int(_number(cfg, "n_per_side", 400, positive=True)))
    raise ConfigError(f"unknown orbit problem {problem!r}; choose initial, mixed or apse")


def cmd_orbit(cfg: dict, pot, pert, out: Outputs, args) -> int:
    traj = _orbit_trajectory(cfg, pot, pert)
    out.csv("trajectory.csv", *trajectory_rows(traj))
    V = free_potential() if pot is None else as_field(pot, pert)
    report = {"problem": cfg.get("problem", "initial"), "n_samples": int(traj.times.size),
              "energy_drift": energy_drift(traj, V)}
    try:
        report["asymptotics"] = omega_plus(traj).to_dict()
        report["escaping"] = True
    except NumericalError as exc:
        report["escaping"] = False
        report["reason"] = str(exc)
    if pot is not None and traj.times[-1] > 0:
        report["virial"] = virial_check(traj, pot, pert)
    out.json("asymptotics.json", report)
    return EXIT_OK


def _points(cfg: dict, omega: np.ndarray) -> np.ndarray:
    if "points" in cfg:
        pts = cfg["points"]
        if not isinstance(pts, list) or not pts:
            raise ConfigError("'points' must be a non-empty list of vectors")
        return np.array([_vector({"p": p}, "p") for p in pts])
    if "x" in cfg:
        return _vector(cfg, "x")[None, :]
    g = cfg.get("grid")
    if not isinstance(g, dict):
        raise ConfigError("give 'points', 'x' or a 'grid' object")
    return cone_grid(omega, _number(g, "R_inner", positive=True), _number(g, "R_outer", positive=True),
                     _number(g, "sigma", cfg.get("sigma", 0.5), positive=True),
                     int(_number(g, "n_radii", positive=True)),
                     int(_number(g, "n_angles", positive=True)),
                     _number(g, "angle_fraction", 0.9, positive=True))


def _map(fn, items, threads: int):
    if threads <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def cmd_mixed(cfg: dict, pot, pert, out: Outputs, args) -> int:
    pot = _require_radial(pot)
    w = _direction(cfg)
    lam = _number(cfg, "lam")
    pts = _points(cfg, w)
    grid = log_grid(_number(cfg, "t_max", 1e24), int(_number(cfg, "n_nodes", 4000)))

    def one(x):
        _, _, fs, rep = solve_mixed_perturbed(pot, pert, ScatteringData(x, w, lam), grid=grid)
        return fs, rep

    results = _map(one, pts, args.threads)
    total = TotalPotential(pot, zero_perturbation(w.size) if pert is None else pert)
    d = w.size
    header = ([f"x{i + 1}" for i in range(d)] + [f"omega{i + 1}" for i in range(d)] + ["lambda"]
              + [f"F{i + 1}" for i in range(d)])
    rows = [[*map(fmt, fs.x), *map(fmt, fs.omega), fmt(fs.lam), *map(fmt, fs.F)]
            for fs, _ in results]
    out.csv("fields.csv", header, rows)
    out.json("mixed.json", {"points": [{"x": fs.x, "energy_defect": fs.energy_defect(total),
                                        "fixed_point": rep.to_dict()} for fs, rep in results]})
    return EXIT_OK


def cmd_phase(cfg: dict, pot, pert, out: Outputs, args) -> int:
    pot = _require_radial(pot)
    w = _direction(cfg)
    lam = _number(cfg, "lam")
    R0 = _number(cfg, "R0", positive=True)
    sigma = _number(cfg, "sigma", 0.5, positive=True)
    rel_step = _number(cfg, "rel_step", 1e-4, positive=True)
    pts = _points(cfg, w)

    def one(x):
        ev = FieldEvaluator(pot, pert, w, lam)
        return eikonal_residual(pot, pert, x, w, lam, R0, sigma, rel_step, evaluator=ev)

    checks = _map(one, pts, args.threads)
    d = w.size
    header = ([f"x{i + 1}" for i in range(d)] + ["phi"] + [f"gradphi{i + 1}" for i in range(d)]
              + ["residual"])
    rows = [[*map(fmt, c.sample.x), fmt(c.sample.phi), *map(fmt, c.sample.grad_phi), fmt(c.residual)]
            for c in checks]
    out.csv("phase.csv", header, rows)
    out.json("phase.json", {
        "n_points": len(checks), "R0": R0, "sigma": sigma, "lambda": lam, "omega": w,
        "max_relative_residual": max(c.relative_residual for c in checks),
        "max_relative_gradient_error": max(c.relative_gradient_error for c in checks),
        "max_energy_identity": max(abs(c.energy_identity) / c.scale for c in checks)})
    return EXIT_OK


def cmd_classify(cfg: dict, pot, pert, out: Outputs, args) -> int:
    pot = _require_radial(pot)
    if "trajectory" in cfg:
        path = Path(cfg["trajectory"])
        if not path.is_absolute():
            path = Path(cfg["_dir"]) / path
        traj = read_trajectory(str(path))
    else:
        traj = _orbit_trajectory(cfg, pot, pert)
    omega = _direction(cfg) if "omega" in cfg else None
    res = classify_orbit(pot, pert, traj, _number(cfg, "R0", positive=True),
                         _number(cfg, "sigma", 0.5, positive=True), tol=_number(cfg, "match_tol", 1e-4),
                         max_doublings=int(_number(cfg, "max_doublings", 20)), omega=omega)
    out.json("classification.json", res.to_dict())
    return EXIT_OK


def cmd_validate(cfg: dict, pot, pert, out: Outputs, args) -> int:
    name = args.suite or cfg.get("suite")
    if name is None:
        raise ConfigError(f"choose a suite with --suite ({', '.join(sorted(SUITES))})")
    if pot is None:
        raise ConfigError("validation needs a radial potential")
    rep = run_suite(name, pot, pert, cfg.get("options", {}))
    out.json(f"validate_{name}.json", rep.to_dict())
    for c in rep.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {name}.{c.name}: value {c.value:.3e}, "
              f"threshold {c.threshold:.3e}, margin {c.margin:.3e}", file=sys.stderr)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_probe(cfg: dict, pot, pert, out: Outputs, args) -> int:
    pot = _require_radial(pot)
    q = cfg.get("quantity")
    if q not in BOUND_QUANTITIES:
        raise ConfigError(f"'quantity' must be one of {BOUND_QUANTITIES}")
    w = _direction(cfg)
    res = bound_probe(pot, pert, q, _points(cfg, w), w, _number(cfg, "lam", 0.0),
                      _number(cfg, "fd_rel", 1e-5, positive=True))
    out.json(f"probe_{q}.json", res)
    return EXIT_OK


HANDLERS = {"orbit": cmd_orbit, "mixed": cmd_mixed, "phase": cmd_phase,
            "classify": cmd_classify, "validate": cmd_validate, "probe": cmd_probe}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lowscat", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, metavar="PATH", help="JSON run configuration")
    p.add_argument("--out", default=".", metavar="DIR", help="output directory (default: .)")
    p.add_argument("--suite", choices=sorted(SUITES), help="suite for the validate command")
    p.add_argument("--threads", type=int, default=1, metavar="N",
                   help="worker threads for point sweeps (default: 1)")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    out = Outputs(args.out)
    try:
        cfg = load_config(args.config)
        pot = build_potential(cfg["potential"])
        pert = build_perturbation(cfg.get("perturbation"), pot)
        if pert is not None and pert.is_zero:
            pert = None
        code = HANDLERS[args.command](cfg, pot, pert, out, args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, LowscatError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, TypeError, KeyError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for name in out.flush():
        print(f"wrote {os.path.join(args.out, name)}", file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
