"""Perturbed mixed problem: y = y1 + z with z the fixed point of a contraction.

Here y1 is the radial-problem orbit for the same (x, omega, lambda) and z
solves z'' - q z = R(z), z(1) = 0, in the decaying class, with
q = -Hess V1(y1) and R(z) the second-order Taylor remainder of -grad V1
plus -grad V2(y1 + z), multiplied by two smooth cutoffs.  The velocity
field is F(x) = dy/dt at t = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import kernels
from ._quad import gauss_legendre_unit
from .errors import (ConeError, ConfigError, CoreEntryError, CutoffActiveError,
                     HardyViolationError, NonConvergenceError)
from .linforce import (CoefficientPath, DecayingSolver, WeightedGridFunction,
                       hardy_margin, log_grid, weighted_norm)
from .potentials import (Perturbation, RadialPotential, TotalPotential, check_conditions,
                         hessian_v1, smooth_step_lt, third_derivative_contraction,
                         zero_perturbation)
from .radial import (KAPPA0_SQ, Cone, ScatteringData, Trajectory, _plane_basis, planar_orbit,
                     radial_field, sigma0)

T_MAX = 1e24
N_NODES = 4000
FIXED_POINT_TOL = 1e-10
# weights (1 - l) w_l of the order-8 Gauss rule for the integral remainder
_TAYLOR_WEIGHTS = np.ascontiguousarray((1.0 - gauss_legendre_unit(8)[0]) * gauss_legendre_unit(8)[1])


@lru_cache(maxsize=64)
def _conditions(pot: RadialPotential, pert: Perturbation):
    return check_conditions(pot, pert, r_max=1e6, n_samples=2000)


def default_eps_bar(pot: RadialPotential, pert: Perturbation) -> float:
    """Midpoint of the feasible eps_bar interval (lower end if the interval is empty)."""
    rep = _conditions(pot, pert)
    if rep.eps_bar is not None:
        return rep.eps_bar
    return max(0.0, 1.0 - pot.alpha * (pot.mu + 2.0 * pert.effective_eps2(pot.mu)))


@dataclass(eq=False)
class FixedPointContext:
    """Everything the Picard map needs for one (x, omega, lambda)."""

    pot: RadialPotential
    pert: Perturbation
    data: ScatteringData
    grid: np.ndarray
    y1: Trajectory
    qpath: CoefficientPath
    s: float
    eps: float
    eps_bar: float
    solver: DecayingSolver | None = field(repr=False)

    @property
    def r_w(self) -> float:
        return 1.0 - self.s

    @property
    def r_y1(self) -> np.ndarray:
        return np.linalg.norm(self.y1.positions, axis=1)

    @property
    def growth(self) -> np.ndarray:
        """t^(alpha - eps), the scale of the second cutoff."""
        return self.grid ** (self.pot.alpha - self.eps)

    def exponent_constraints(self) -> dict:
        a = self.pot.alpha
        return {"s_window": 0.5 * self.eps_bar - abs(a - 0.5 - self.eps),
                "eps_below_alpha_eps2": a * self.pert.effective_eps2(self.pot.mu) - self.eps}


def make_context(pot: RadialPotential, pert: Perturbation, data: ScatteringData,
                 grid=None, eps: float | None = None, eps_bar: float | None = None,
                 kappa0_sq: float = KAPPA0_SQ, check_hardy: bool = True) -> FixedPointContext:
    """Radial reference orbit, coefficient path and exponents for the fixed point problem.

    Defaults: eps = 0.9 alpha eps2, s = alpha + 1/2 - eps, eps_bar from the
    condition audit, grid log-uniform on [1, 1e24] with 4000 intervals.
    """
    grid = log_grid(T_MAX, N_NODES) if grid is None else np.asarray(grid, dtype=float)
    alpha = pot.alpha
    eps2 = pert.effective_eps2(pot.mu)
    eps = 0.9 * alpha * eps2 if eps is None else float(eps)
    eb = default_eps_bar(pot, pert) if eps_bar is None else float(eps_bar)
    s = alpha + 0.5 - eps
    orbit = planar_orbit(pot, data.lam, data.r1, data.theta1(), float(grid[-1]), kappa0_sq)
    pl = orbit.trajectory(grid)
    e = _plane_basis(data.x, data.omega)
    w = data.omega
    pos = pl.positions[:, :1] * w + pl.positions[:, 1:2] * e
    vel = pl.velocities[:, :1] * w + pl.velocities[:, 1:2] * e
    y1 = Trajectory(grid, pos, vel, data.lam)
    q = -hessian_v1(pot, pos)
    qpath = CoefficientPath.from_samples(grid, q, eb)
    if check_hardy:
        margin = hardy_margin(qpath, grid)
        if margin < 0:
            raise HardyViolationError(f"Hardy margin {margin:.3e} along the reference orbit")
    solver = None if pert.is_zero else DecayingSolver(qpath, grid, check_hardy=False)
    return FixedPointContext(pot, pert, data, grid, y1, qpath, s, eps, eb, solver)


# ----------------------------------------------------------------------------
# Picard map
# ----------------------------------------------------------------------------

def _cutoffs(ctx: FixedPointContext, zv: np.ndarray):
    """chi1 chi2 on every node for z values (n, d) or (n, d, m)."""
    zn = np.linalg.norm(zv, axis=1)
    r1 = ctx.r_y1
    scale = ctx.growth
    if zv.ndim == 3:
        r1 = r1[:, None]
        scale = scale[:, None]
    chi1 = smooth_step_lt(zn / r1, 2.0 / 3.0)[0]
    chi2 = smooth_step_lt(zn / scale, 2.0)[0]
    return chi1 * chi2, zn / r1, zn / scale


def _remainder(ctx: FixedPointContext, zv: np.ndarray, active: np.ndarray) -> np.ndarray:
    """-int_0^1 (1-l) D^3 V1(y1 + l z){z, z} dl - grad V2(y1 + z) on active nodes; (k, d)."""
    y = ctx.y1.positions[active]
    z = zv[active]
    out = -ctx.pert.grad_v2(y + z) if not ctx.pert.is_zero else np.zeros_like(z)
    if not np.any(z):
        return out
    lx, lw = gauss_legendre_unit(8)
    pts = np.ascontiguousarray(y[None, :, :] + lx[:, None, None] * z[None, :, :])
    r = np.sqrt(np.einsum("lni,lni->ln", pts, pts))
    if np.min(r) < 1.0:
        raise CoreEntryError("Taylor segment between y1 and y1 + z enters |x| < 1")
    pot = ctx.pot
    out -= kernels.radial_remainder(pts, r, np.ascontiguousarray(z), pot._d(r, 1), pot._d(r, 2),
                                    pot._d(r, 3), _TAYLOR_WEIGHTS)
    return out


def _forcing(ctx: FixedPointContext, zv: np.ndarray) -> np.ndarray:
    """Cut-off remainder chi1 chi2 R(z) on the grid for z values (n, d) or (n, d, m)."""
    chi, _, _ = _cutoffs(ctx, zv)
    f = np.zeros_like(zv)
    if zv.ndim == 2:
        act = chi > 0
        if np.any(act):
            f[act] = chi[act, None] * _remainder(ctx, zv, act)
        return f
    for c in range(zv.shape[2]):
        act = chi[:, c] > 0
        if np.any(act):
            f[act, :, c] = chi[act, c, None] * _remainder(ctx, zv[:, :, c], act)
    return f


def taylor_residual(z, ctx: FixedPointContext, t=None):
    """Taylor remainder R(z) (without cutoffs) at time(s) t on the grid, or on all nodes."""
    zv = z.values if isinstance(z, WeightedGridFunction) else np.asarray(z, dtype=float)
    if t is None:
        idx = np.arange(ctx.grid.size)
    else:
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        idx = np.searchsorted(ctx.grid, tt * (1 - 1e-12))
        if np.any(idx >= ctx.grid.size) or np.any(np.abs(ctx.grid[idx] - tt) > 1e-9 * tt):
            raise ConfigError("taylor_residual times must be grid nodes")
    mask = np.zeros(ctx.grid.size, dtype=bool)
    mask[idx] = True
    out = _remainder(ctx, zv, mask)
    if t is not None and np.ndim(t) == 0:
        return out[0]
    return out


def picard_map(z, ctx: FixedPointContext) -> WeightedGridFunction:
    """One application of the contraction: decaying solve with forcing chi1 chi2 R(z)."""
    zv = z.values if isinstance(z, WeightedGridFunction) else np.asarray(z, dtype=float)
    if np.any(zv[0] != 0):
        raise ConfigError("iterates must vanish at t = 1")
    f = _forcing(ctx, zv)
    out, dout, _ = ctx.solver.solve_values(f)
    return WeightedGridFunction(ctx.grid, out, ctx.s, dout)


def _picard_values(ctx: FixedPointContext, Z: np.ndarray) -> np.ndarray:
    """Picard map on raw node values (n, d) or a batch (n, d, m), without dz/dt."""
    f = _forcing(ctx, Z)
    out, _, _ = ctx.solver.solve_values(f, derivative=False, residual=False)
    return out


def _smooth_probe(ctx: FixedPointContext, rng: np.random.Generator, amplitude: float) -> np.ndarray:
    """Random smooth perturbation vanishing at t = 1, scaled to amplitude t^(alpha - eps)."""
    tau = np.log(ctx.grid)
    span = tau[-1]
    d = ctx.data.dim
    out = np.zeros((ctx.grid.size, d))
    for k in range(1, 5):
        coef = rng.normal(size=d) / k
        out += np.sin(k * math.pi * tau / span)[:, None] * coef
    out *= (1.0 - 1.0 / ctx.grid)[:, None] * ctx.growth[:, None]
    return amplitude * out / max(1e-300, float(np.max(np.abs(out) / ctx.growth[:, None])))


def contraction_probe(ctx: FixedPointContext, center: np.ndarray | None = None,
                      n_pairs: int = 10, amplitude: float = 0.05, seed: int = 0) -> float:
    """Largest ratio |P(z_a) - P(z_b)|_{-s} / |z_a - z_b|_{-s} over random smooth pairs."""
    rng = np.random.default_rng(seed)
    base = np.zeros((ctx.grid.size, ctx.data.dim)) if center is None else center
    za = np.stack([base + _smooth_probe(ctx, rng, amplitude) for _ in range(n_pairs)], axis=2)
    zb = np.stack([base + _smooth_probe(ctx, rng, amplitude) for _ in range(n_pairs)], axis=2)
    pa = _picard_values(ctx, za)
    pb = _picard_values(ctx, zb)
    ratios = []
    for c in range(n_pairs):
        den = weighted_norm(ctx.grid, za[:, :, c] - zb[:, :, c], ctx.s)
        num = weighted_norm(ctx.grid, pa[:, :, c] - pb[:, :, c], ctx.s)
        ratios.append(num / den)
    return float(max(ratios))


# ----------------------------------------------------------------------------
# fixed point and field
# ----------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FieldSample:
    """Velocity field sample F(x) for data (x, omega, lam), with the radial field F1."""

    x: np.ndarray
    omega: np.ndarray
    lam: float
    F: np.ndarray
    F1: np.ndarray

    def energy_defect(self, total: TotalPotential) -> float:
        return float(0.5 * self.F @ self.F + total.value(self.x) - self.lam)


@dataclass
class FixedPointReport:
    iterations: int
    increment: float
    norm: float
    contraction_ratio: float
    chi1_margin: float
    chi2_margin: float
    bound_margin: float
    fixed_point_residual: float
    s: float
    eps: float
    eps_bar: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def solve_mixed_perturbed(pot: RadialPotential, pert: Perturbation | None, data: ScatteringData,
                          grid=None, tol: float = FIXED_POINT_TOL, max_iter: int = 200,
                          z0: np.ndarray | None = None, R0: float | None = None,
                          sigma: float | None = None, ctx: FixedPointContext | None = None,
                          require_inactive: bool = True):
    """Solve the perturbed mixed problem by Picard iteration.

    Returns (z, y, FieldSample, FixedPointReport).  If R0/sigma are given the
    data must lie in the corresponding outgoing cone.  ``z0`` warm-starts the
    iteration (it must vanish at t = 1).
    """
    pert = zero_perturbation(data.dim) if pert is None else pert
    if R0 is not None or sigma is not None:
        sig = sigma0(pot) if sigma is None else sigma
        if not Cone(1.0 if R0 is None else R0, sig, data.omega).contains(data.x):
            raise ConeError("x is outside the outgoing cone of the fixed point construction")
    if ctx is None:
        # the Hardy bound only matters when there is a perturbation to solve for
        ctx = make_context(pot, pert, data, grid, check_hardy=not pert.is_zero)
    n, d = ctx.grid.size, data.dim
    F1 = ctx.y1.velocities[0].copy()
    if pert.is_zero:
        z = WeightedGridFunction(ctx.grid, np.zeros((n, d)), ctx.s, np.zeros((n, d)))
        rep = FixedPointReport(0, 0.0, 0.0, 0.0, 1.0 / 3.0, 1.0, 0.5, 0.0, ctx.s, ctx.eps,
                               ctx.eps_bar)
        return z, ctx.y1, FieldSample(data.x, data.omega, data.lam, F1, F1), rep

    zv = np.zeros((n, d)) if z0 is None else np.array(z0, dtype=float)
    zv[0] = 0.0
    prev_inc = None
    ratio = 0.0
    it = 0
    inc = math.inf
    znorm = 0.0
    for it in range(1, max_iter + 1):
        new = _picard_values(ctx, zv)
        inc = weighted_norm(ctx.grid, new - zv, ctx.s)
        znorm = weighted_norm(ctx.grid, new, ctx.s)
        if prev_inc is not None and prev_inc > 0 and inc > 1e-3 * tol * max(1.0, znorm):
            ratio = max(ratio, inc / prev_inc)
        prev_inc = inc
        zv = new
        if inc <= tol * max(1.0, znorm):
            break
    else:
        raise NonConvergenceError(f"Picard iteration stalled at increment {inc:.3e}")
    if ratio >= 1.0:
        raise NonConvergenceError(f"measured contraction ratio {ratio:.3f} >= 1")
    # one more full application supplies dz/dt and the fixed point residual
    final = picard_map(WeightedGridFunction(ctx.grid, zv, ctx.s), ctx)
    fp_res = weighted_norm(ctx.grid, final.values - zv, ctx.s)
    zv, zdot = final.values, final.derivative
    _, q1, q2 = _cutoffs(ctx, zv)
    chi1_margin = 1.0 / 3.0 - float(np.max(q1))
    chi2_margin = 1.0 - float(np.max(q2))
    bound_margin = 0.5 - float(np.max(q2))
    if require_inactive and (chi1_margin <= 0 or chi2_margin <= 0):
        raise CutoffActiveError(
            f"cutoffs active at the fixed point (margins {chi1_margin:.3g}, {chi2_margin:.3g}); "
            "increase |x|")
    z = WeightedGridFunction(ctx.grid, zv, ctx.s, zdot)
    y = Trajectory(ctx.grid, ctx.y1.positions + zv, ctx.y1.velocities + zdot, data.lam)
    F = F1 + zdot[0]
    rep = FixedPointReport(it, inc, znorm, ratio, chi1_margin, chi2_margin, bound_margin,
                           fp_res, ctx.s, ctx.eps, ctx.eps_bar)
    return z, y, FieldSample(data.x, data.omega, data.lam, F, F1), rep


def velocity_field(pot: RadialPotential, pert: Perturbation | None, x, omega, lam: float,
                   **kwargs) -> np.ndarray:
    """F(x) for the given asymptotic data; reduces to the radial field when V2 = 0."""
    if pert is None or pert.is_zero:
        return radial_field(pot, x, omega, lam)
    data = ScatteringData(x, omega, lam)
    return solve_mixed_perturbed(pot, pert, data, **kwargs)[2].F


# ----------------------------------------------------------------------------
# R0 / sigma selection and checks
# ----------------------------------------------------------------------------

def _probe_points(omega: np.ndarray, R: float, angle: float) -> list[np.ndarray]:
    d = omega.size
    e = np.zeros(d)
    e[int(np.argmin(np.abs(omega)))] = 1.0
    e -= (e @ omega) * omega
    e /= np.linalg.norm(e)
    return [R * (math.cos(a) * omega + math.sin(a) * e) for a in (0.0, angle, -angle)]


def select_R0(pot: RadialPotential, pert: Perturbation, omega, lam: float,
              R_start: float = 1.0, max_doublings: int = 30, sigma: float | None = None,
              target: float = 0.5) -> dict:
    """Double R until the contraction ratio is <= target and the cutoffs are inactive on probes.

    Probes: x = R omega and two points at the angle of the cone edge.
    Returns {"R0", "contraction_ratio", "history"}.
    """
    w = np.asarray(omega, dtype=float)
    w = w / np.linalg.norm(w)
    sig = min(0.5, sigma0(pot)) if sigma is None else sigma
    angle = math.acos(1.0 - sig)
    R = max(1.0, R_start)
    history = []
    for _ in range(max_doublings):
        worst = 0.0
        ok = True
        for x in _probe_points(w, R, angle):
            data = ScatteringData(x, w, lam)
            try:
                ctx = make_context(pot, pert, data)
                z, _, _, rep = solve_mixed_perturbed(pot, pert, data, ctx=ctx)
                probe = contraction_probe(ctx, center=z.values)
                worst = max(worst, rep.contraction_ratio, probe)
            except (CutoffActiveError, NonConvergenceError, CoreEntryError, HardyViolationError):
                ok = False
                worst = math.inf
                break
        history.append((R, worst))
        if ok and worst <= target:
            return {"R0": R, "contraction_ratio": worst, "sigma": sig, "history": history}
        R *= 2.0
    raise NonConvergenceError("no admissible R0 found within the doubling budget")


def select_sigma(pot: RadialPotential, pert: Perturbation, omega, lam: float, R0: float,
                 sigma_start: float | None = None, max_halvings: int = 12) -> dict:
    """Halve sigma until probe orbits from the cone edge stay in the cone for all grid times."""
    w = np.asarray(omega, dtype=float)
    w = w / np.linalg.norm(w)
    sig = min(0.5, sigma0(pot)) if sigma_start is None else sigma_start
    for _ in range(max_halvings):
        angle = math.acos(1.0 - sig)
        cone = Cone(R0, sig, w)
        ok = True
        for x in _probe_points(w, R0 * 1.0001, angle * 0.999)[1:]:
            try:
                _, y, _, _ = solve_mixed_perturbed(pot, pert, ScatteringData(x, w, lam))
            except (CutoffActiveError, NonConvergenceError, CoreEntryError):
                ok = False
                break
            if not np.all(cone.contains(y.positions)):
                ok = False
                break
        if ok:
            return {"sigma0": sig}
        sig *= 0.5
    raise NonConvergenceError("no admissible sigma0 found")


def flow_consistency(pot: RadialPotential, pert: Perturbation | None, data: ScatteringData,
                     t_checks=None, grid=None) -> dict:
    """Compare dy/dt(t_bar) with F(y(t_bar)) re-solved from y(t_bar) at the same omega, lambda.

    Check times are snapped to grid nodes.  Returns per-time errors relative to
    g(|y(t_bar)|) and their maximum.
    """
    pert = zero_perturbation(data.dim) if pert is None else pert
    z, y, _, _ = solve_mixed_perturbed(pot, pert, data, grid=grid)
    grid_ = y.times
    if t_checks is None:
        t_checks = np.geomspace(1.0, 1e4, 5)
    idx = np.unique(np.searchsorted(grid_, np.asarray(t_checks, dtype=float)))
    idx = idx[idx < grid_.size]
    errs = []
    for i in idx:
        x2 = y.positions[i]
        v = y.velocities[i]
        F = velocity_field(pot, pert, x2, data.omega, data.lam, grid=grid)
        r = float(np.linalg.norm(x2))
        gr = math.sqrt(2 * data.lam - 2 * float(pot._v(r)))
        errs.append(float(np.linalg.norm(v - F)) / gr)
    return {"times": grid_[idx].tolist(), "errors": errs, "max_error": max(errs)}


def eps_check(pot: RadialPotential, pert: Perturbation) -> float:
    """The exponent min(eps/alpha, eps2) governing F - F1 (with eps = 0.9 alpha eps2)."""
    eps2 = pert.effective_eps2(pot.mu)
    eps = 0.9 * pot.alpha * eps2
    return min(eps / pot.alpha, eps2)


def field_cone_bounds(pot: RadialPotential, pert: Perturbation | None, samples) -> dict:
    """Fit the constants of the direction and cone estimates for F over (x, omega, lam) samples."""
    pert = zero_perturbation(len(samples[0][0])) if pert is None else pert
    ec = eps_check(pot, pert) if not pert.is_zero else 0.0
    rows = []
    for x, w, lam in samples:
        x = np.asarray(x, dtype=float)
        w = np.asarray(w, dtype=float)
        w = w / np.linalg.norm(w)
        F = velocity_field(pot, pert, x, w, lam)
        F1 = radial_field(pot, x, w, lam)
        r = float(np.linalg.norm(x))
        xh = x / r
        Fh, F1h = F / np.linalg.norm(F), F1 / np.linalg.norm(F1)
        rows.append({"r": r, "one_minus_cos_theta1": float(1 - xh @ w),
                     "one_minus_cos_psi1": float(1 - Fh @ xh),
                     "one_minus_F_dot_omega": float(1 - Fh @ w),
                     "direction_gap": float(np.linalg.norm(Fh - F1h)),
                     "theta1": float(math.acos(np.clip(xh @ w, -1, 1))),
                     "psi1": float(math.acos(np.clip(Fh @ xh, -1, 1)))})
    decay = np.array([r_["r"] ** -ec for r_ in rows])
    gap = np.array([r_["direction_gap"] for r_ in rows])
    a = np.array([r_["one_minus_cos_theta1"] for r_ in rows])
    p = np.array([r_["one_minus_cos_psi1"] for r_ in rows])
    fw = np.array([r_["one_minus_F_dot_omega"] for r_ in rows])
    C_dir = float(np.max(gap / decay))
    C_a = float(np.max(p / (a + decay)))
    C_c = float(np.max(fw / (a + decay)))
    mask = a > 1e-12
    c_b = float(np.min((p[mask] + C_dir * decay[mask]) / a[mask])) if np.any(mask) else math.nan
    return {"eps_check": ec, "C_direction": C_dir, "C_a": C_a, "c_b": c_b, "C_c": C_c,
            "samples": rows}


def truncated_field_convergence(pot: RadialPotential, pert: Perturbation, data: ScatteringData,
                                n_list, fd_step: float = 1e-5) -> list[dict]:
    """|F_n(x) - F(x)| and |dF_n - dF| (central differences) for truncations V2,n."""
    def jac(p):
        h = fd_step * data.r1
        cols = []
        for k in range(data.dim):
            e = np.zeros(data.dim)
            e[k] = h
            fp = velocity_field(pot, p, data.x + e, data.omega, data.lam)
            fm = velocity_field(pot, p, data.x - e, data.omega, data.lam)
            cols.append((fp - fm) / (2 * h))
        return np.stack(cols, axis=1)

    F = velocity_field(pot, pert, data.x, data.omega, data.lam)
    J = jac(pert)
    out = []
    for nrad in n_list:
        pn = pert.truncated(float(nrad))
        Fn = velocity_field(pot, pn, data.x, data.omega, data.lam)
        Jn = jac(pn)
        out.append({"n": float(nrad), "field_deviation": float(np.linalg.norm(Fn - F)),
                    "jacobian_deviation": float(np.linalg.norm(Jn - J))})
    return out


def lambda_continuity(pot: RadialPotential, pert: Perturbation | None, x, omega,
                      lams=(1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)) -> dict:
    """|F(x, omega, lam) - F(x, omega, 0)| for decreasing lam."""
    F0 = velocity_field(pot, pert, x, omega, 0.0)
    devs = [float(np.linalg.norm(velocity_field(pot, pert, x, omega, lam) - F0)) for lam in lams]
    return {"lambdas": list(lams), "deviations": devs,
            "monotone": all(devs[i + 1] < devs[i] for i in range(len(devs) - 1))}


BOUND_QUANTITIES = ("dF", "dF_minus_dF1", "dy", "dydot", "y_inverse_bounds")


def bound_probe(pot: RadialPotential, pert: Perturbation | None, quantity_id: str,
                sample_points, omega, lam: float = 0.0, fd_rel: float = 1e-5) -> dict:
    """Log-log fit of a derivative bound against |x| along the given sample points.

    Quantities (first derivatives by central differences, step |x| * fd_rel):
      dF            |d_x F|                              predicted exponent -1 - mu/2 (lam = 0)
      dF_minus_dF1  |d_x (F - F1)|                       bound -1 - mu/2 - eps_check
      dy            sup_t |d_x y(t)| g(|y|) / g(|x|)     bound 0
      dydot         sup_t |d_x ydot(t)| |y|^mu g(|y|)    bound -1
      y_inverse_bounds  sup_t (t-1) g(|y|)/|y| and sup_t t^alpha/|y|   bound 0
    """
    if quantity_id not in BOUND_QUANTITIES:
        raise ConfigError(f"unknown quantity {quantity_id!r}; choose from {BOUND_QUANTITIES}")
    pts = [np.asarray(p, dtype=float) for p in sample_points]
    d = pts[0].size
    pert = zero_perturbation(d) if pert is None else pert
    w = np.asarray(omega, dtype=float)
    w = w / np.linalg.norm(w)
    mu = pot.mu

    def gfun(r):
        return np.sqrt(2 * lam - 2 * pot._v(r))

    vals = []
    radii = []
    for x in pts:
        r = float(np.linalg.norm(x))
        radii.append(r)
        h = fd_rel * r
        if quantity_id in ("dF", "dF_minus_dF1"):
            cols = []
            for k in range(d):
                e = np.zeros(d)
                e[k] = h
                fp = velocity_field(pot, pert, x + e, w, lam)
                fm = velocity_field(pot, pert, x - e, w, lam)
                if quantity_id == "dF_minus_dF1":
                    fp = fp - radial_field(pot, x + e, w, lam)
                    fm = fm - radial_field(pot, x - e, w, lam)
                cols.append((fp - fm) / (2 * h))
            vals.append(float(np.linalg.norm(np.stack(cols, 1), 2)))
        elif quantity_id in ("dy", "dydot"):
            grid = log_grid(1e8, 1000)
            best = 0.0
            for k in range(d):
                e = np.zeros(d)
                e[k] = h
                _, yp, _, _ = solve_mixed_perturbed(pot, pert, ScatteringData(x + e, w, lam), grid=grid)
                _, ym, _, _ = solve_mixed_perturbed(pot, pert, ScatteringData(x - e, w, lam), grid=grid)
                ry = np.linalg.norm(0.5 * (yp.positions + ym.positions), axis=1)
                if quantity_id == "dy":
                    dq = np.linalg.norm(yp.positions - ym.positions, axis=1) / (2 * h)
                    best = max(best, float(np.max(dq * gfun(ry) / gfun(r))))
                else:
                    dq = np.linalg.norm(yp.velocities - ym.velocities, axis=1) / (2 * h)
                    best = max(best, float(np.max(dq * ry**mu * gfun(ry))))
            vals.append(best)
        else:
            grid = log_grid(1e8, 1000)
            _, y, _, _ = solve_mixed_perturbed(pot, pert, ScatteringData(x, w, lam), grid=grid)
            ry = np.linalg.norm(y.positions, axis=1)
            a = float(np.max((grid - 1) * gfun(ry) / ry))
            b = float(np.max(grid**pot.alpha / ry))
            vals.append(max(a, b))
    ec = eps_check(pot, pert) if not pert.is_zero else 0.0
    predicted = {"dF": -1.0 - mu / 2.0 if lam == 0 else -1.0,
                 "dF_minus_dF1": (-1.0 - mu / 2.0 if lam == 0 else -1.0) - ec,
                 "dy": 0.0, "dydot": -1.0, "y_inverse_bounds": 0.0}[quantity_id]
    lr, lv = np.log(radii), np.log(np.maximum(vals, 1e-300))
    slope = float(np.polyfit(lr, lv, 1)[0]) if len(pts) >= 2 else math.nan
    return {"quantity": quantity_id, "radii": radii, "values": vals,
            "fitted_exponent": slope, "predicted_exponent": predicted}
