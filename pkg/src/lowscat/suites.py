"""Self-contained validation suites with pass/fail margins.

Each suite returns a :class:`SuiteReport` whose checks carry the measured
value, the threshold and a signed margin (positive = pass).  Suites take a
parsed configuration mapping for their optional parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .asymptotics import as_field, integrate_newton
from .eikonal import (FieldEvaluator, classify_orbit, cone_grid, curl_check, eikonal_residual,
                      phase, phase_arc_ray)
from .errors import ConfigError
from .linforce import CoefficientPath, WeightedGridFunction, log_grid, refinement_study, solve_decaying
from .perturbed import flow_consistency, select_R0, solve_mixed_perturbed
from .potentials import Perturbation, RadialPotential, check_conditions
from .radial import (PlanarOrbit, ScatteringData, allowed_angle, L_of_theta1, theta_tp,
                     turning_point)

RELAXED_KAPPA0_SQ = 1.0 - 1e-9


@dataclass
class Check:
    name: str
    value: float
    threshold: float
    kind: str = "max"        # "max": value <= threshold, "min": value >= threshold

    @property
    def margin(self) -> float:
        if self.kind == "max":
            return float(self.threshold - self.value)
        return float(self.value - self.threshold)

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value)) and self.margin >= 0

    def to_dict(self) -> dict:
        return {"name": self.name, "value": float(self.value), "threshold": float(self.threshold),
                "kind": self.kind, "margin": self.margin, "pass": self.passed}


@dataclass
class SuiteReport:
    suite: str
    checks: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def add(self, name: str, value: float, threshold: float, kind: str = "max") -> Check:
        c = Check(name, float(value), float(threshold), kind)
        self.checks.append(c)
        return c

    def to_dict(self) -> dict:
        return {"suite": self.suite, "pass": self.passed,
                "checks": [c.to_dict() for c in self.checks], "info": self.info}


# ----------------------------------------------------------------------------
# closed forms for the Coulomb case
# ----------------------------------------------------------------------------

def coulomb_theta_tp(gamma: float, lam: float, L: float) -> float:
    return math.pi - math.atan(math.sqrt(2.0 * lam * L * L / gamma**2))


def coulomb_allowed_angle(gamma: float, lam: float, r1: float) -> float:
    return math.pi - math.atan(math.sqrt(2.0 * lam * (2.0 * lam * r1**2 / gamma**2 + 2.0 * r1 / gamma)))


def coulomb_orbit_error(pot: RadialPotential, lam: float, L: float, r_out: float = 100.0,
                        n: int = 200) -> float:
    """Max relative deviation of a mixed-problem orbit from the conic-section orbit equation."""
    gamma = pot.params["gamma"]
    r_tp = turning_point(pot, lam, L)
    r1 = 1.01 * r_tp
    orb = PlanarOrbit(pot, lam, r1, L, t_max=10.0, kappa0_sq=RELAXED_KAPPA0_SQ)
    times = orb.t_of_r(np.geomspace(r1, r_out, n))
    tr = orb.trajectory(times)
    r = np.linalg.norm(tr.positions, axis=1)
    ang = -np.arctan2(tr.positions[:, 1], tr.positions[:, 0])     # measured from the asymptote
    th = coulomb_theta_tp(gamma, lam, L)
    lhs = L * L / (gamma * r)
    rhs = 1.0 - np.cos(th - ang) / math.cos(th)
    return float(np.max(np.abs(lhs - rhs) / np.abs(rhs)))


# ----------------------------------------------------------------------------
# suites
# ----------------------------------------------------------------------------

def suite_conditions(pot: RadialPotential, pert: Perturbation | None, cfg: dict) -> SuiteReport:
    rep = check_conditions(pot, pert, r_max=float(cfg.get("r_max", 1e6)))
    out = SuiteReport("conditions", info=rep.to_dict())
    for k, v in rep.margins.items():
        strict = k not in rep._non_strict
        out.add(k, v, 1e-300 if strict else 0.0, "min")
    return out


def suite_radial_oracles(pot: RadialPotential, pert, cfg: dict) -> SuiteReport:
    if pot.name not in ("coulomb", "power_law"):
        raise ConfigError("radial_oracles needs a power-law or Coulomb potential")
    out = SuiteReport("radial_oracles")
    tol = float(cfg.get("tol", 1e-6))
    if pot.name == "coulomb":
        gamma = pot.params["gamma"]
        worst = 0.0
        for lam in (0.0, 0.5):
            for L in cfg.get("L_values", (2.0, 3.0, 5.0)):
                worst = max(worst, coulomb_orbit_error(pot, lam, float(L)))
                th = theta_tp(pot, lam, float(L))
                worst = max(worst, abs(th - coulomb_theta_tp(gamma, lam, float(L))))
        out.add("orbit_equation", worst, tol)
        al = allowed_angle(pot, 0.5, 2.0)
        out.add("allowed_angle", abs(al - coulomb_allowed_angle(gamma, 0.5, 2.0)), tol)
        # the zero-energy sweep reaches pi - 1e-3
        target = math.pi - 1e-3
        L = L_of_theta1(pot, 0.0, 2.0, -target, kappa0_sq=RELAXED_KAPPA0_SQ)
        orb = PlanarOrbit(pot, 0.0, 2.0, L, t_max=10.0, kappa0_sq=RELAXED_KAPPA0_SQ)
        out.add("zero_energy_sweep", abs(abs(orb.theta1) - target), tol)
    if pot.mu < 2.0:
        exact = math.pi / (2.0 - pot.mu)
        vals = []
        for L in np.linspace(2.0, 6.0, 10):
            vals.append(theta_tp(pot, 0.0, float(L)))
        out.add("zero_energy_theta_tp", max(abs(v - exact) for v in vals), 1e-8)
        out.add("theta_tp_spread", float(np.std(vals)), 1e-10)
    return out


def suite_linforce(pot, pert, cfg: dict) -> SuiteReport:
    out = SuiteReport("linforce")
    q = CoefficientPath.constant_zero(1)
    study = refinement_study(q, lambda t: t**-3.0, t_max=1e6, n0=125, levels=4,
                             exact=lambda t: (1.0 / t - 1.0) / 2.0, window=1e3)
    grid = log_grid(1e6, 4000)
    z = solve_decaying(q, WeightedGridFunction(grid, grid**-3.0)).values[:, 0]
    m = grid <= 1e3
    out.add("analytic_error", float(np.max(np.abs(z[m] - (1.0 / grid[m] - 1.0) / 2.0))), 1e-7)
    out.add("observed_order", min(study["orders"]), 2.0, "min")
    z0 = solve_decaying(q, WeightedGridFunction(grid, np.zeros_like(grid))).values
    out.add("zero_rhs", float(np.max(np.abs(z0))), 1e-12)
    out.info = study
    return out


def _direction(cfg: dict, d: int) -> np.ndarray:
    w = np.asarray(cfg.get("omega", [1.0] + [0.0] * (d - 1)), dtype=float)
    return w / np.linalg.norm(w)


def suite_fixed_point(pot, pert: Perturbation | None, cfg: dict) -> SuiteReport:
    out = SuiteReport("fixed_point")
    d = pert.dim if pert is not None and pert.dim else 2
    w = _direction(cfg, d)
    lam = float(cfg.get("lam", 0.0))
    if pert is None or pert.is_zero:
        x = np.asarray(cfg.get("x", 10.0 * w + np.roll(w, 1)), dtype=float)
        fc = flow_consistency(pot, pert, ScatteringData(x, w, lam))
        out.add("flow_consistency", fc["max_error"], 1e-8)
        return out
    if "R0" in cfg:
        R0 = float(cfg["R0"])
        ratio = None
    else:
        sel = select_R0(pot, pert, w, lam)
        R0, ratio = sel["R0"], sel["contraction_ratio"]
    x = np.asarray(cfg.get("x", 3.0 * R0 * w + R0 * np.roll(w, 1)), dtype=float)
    _, _, _, rep = solve_mixed_perturbed(pot, pert, ScatteringData(x, w, lam), require_inactive=False)
    out.add("contraction_ratio", rep.contraction_ratio if ratio is None else ratio, 0.5)
    out.add("bound_margin", rep.bound_margin, 0.0, "min")
    out.add("chi1_margin", rep.chi1_margin, 1e-300, "min")
    out.add("chi2_margin", rep.chi2_margin, 1e-300, "min")
    fc = flow_consistency(pot, pert, ScatteringData(x, w, lam))
    out.add("flow_consistency", fc["max_error"], 1e-5)
    out.info = {"R0": R0, "x": x.tolist(), "report": rep.to_dict()}
    return out


def suite_eikonal(pot, pert: Perturbation | None, cfg: dict) -> SuiteReport:
    out = SuiteReport("eikonal")
    d = pert.dim if pert is not None and pert.dim else 2
    w = _direction(cfg, d)
    lam = float(cfg.get("lam", 0.0))
    perturbed = pert is not None and not pert.is_zero
    R0 = float(cfg.get("R0", 32.0 if perturbed else 4.0))
    sigma = float(cfg.get("sigma", 0.5))
    pts = cone_grid(w, float(cfg.get("R_inner", 2.0 * R0)), float(cfg.get("R_outer", 20.0 * R0)),
                    sigma, int(cfg.get("n_radii", 2)), int(cfg.get("n_angles", 2)))
    res_tol = 1e-4 if perturbed else 1e-7
    worst_res = worst_grad = worst_curl = 0.0
    for x in pts:
        ev = FieldEvaluator(pot, pert, w, lam)
        chk = eikonal_residual(pot, pert, x, w, lam, R0, sigma, evaluator=ev)
        worst_res = max(worst_res, chk.relative_residual)
        worst_grad = max(worst_grad, chk.relative_gradient_error)
        c = curl_check(pot, pert, x, w, lam, R0, sigma, evaluator=ev)
        worst_curl = max(worst_curl, c * np.linalg.norm(x) / np.linalg.norm(chk.sample.F))
    out.add("eikonal_residual", worst_res, res_tol)
    out.add("gradient_error", worst_grad, 1e-5)
    out.add("curl", worst_curl, 1e-5)
    x = pts[-1]
    ev = FieldEvaluator(pot, pert, w, lam)
    p1 = phase(pot, pert, x, w, lam, R0, sigma, evaluator=ev)
    p2 = phase_arc_ray(pot, pert, x, w, lam, R0, evaluator=ev)
    out.add("path_independence", abs(p1 - p2) / max(1.0, abs(p1)), 1e-6)
    out.info = {"n_points": int(len(pts)), "R0": R0, "sigma": sigma}
    return out


def suite_classification(pot, pert: Perturbation | None, cfg: dict) -> SuiteReport:
    out = SuiteReport("classification")
    x0 = np.asarray(cfg.get("x0", [-30.0, 8.0]), dtype=float)
    direction = np.asarray(cfg.get("direction", [1.0, 0.0]), dtype=float)
    direction = direction / np.linalg.norm(direction)
    perturbed = pert is not None and not pert.is_zero
    R0 = float(cfg.get("R0", 32.0 if perturbed else 4.0))
    sigma = float(cfg.get("sigma", 0.5))
    t_end = float(cfg.get("t_end", 1e6))
    V = as_field(pot, pert)
    for lam in cfg.get("lambdas", (0.0, 0.3)):
        speed = math.sqrt(2.0 * (float(lam) - float(V.value(x0))))
        te = np.concatenate(([0.0], np.geomspace(1e-2, t_end, 3000)))
        tr = integrate_newton(V, x0, speed * direction, (0.0, t_end), tol=1e-12, t_eval=te)
        res = classify_orbit(pot, pert, tr, R0, sigma)
        out.add(f"position_match_lam{lam:g}", res.position_match, 1e-4)
        out.add(f"velocity_match_lam{lam:g}", res.velocity_match, 1e-4)
        out.info[f"T0_lam{lam:g}"] = res.T0
    return out


SUITES: dict[str, Callable[[RadialPotential, Perturbation | None, dict], SuiteReport]] = {
    "conditions": suite_conditions,
    "radial_oracles": suite_radial_oracles,
    "linforce": suite_linforce,
    "fixed_point": suite_fixed_point,
    "eikonal": suite_eikonal,
    "classification": suite_classification,
}


def run_suite(name: str, pot: RadialPotential, pert: Perturbation | None, cfg: dict) -> SuiteReport:
    if name not in SUITES:
        raise ConfigError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    return SUITES[name](pot, pert, cfg)
