"""Forward Newton integration and large-time diagnostics of scattering orbits.

Given an orbit x(t) this module estimates the asymptotic directions of
position and velocity, fits their approach rate, checks the virial lower
bounds and fits the growth exponents of |x|, |dx/dt| and the angular
momentum.  ``spiral_example`` builds a potential whose zero-energy orbit is
a logarithmic spiral, so the direction x/|x| never settles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .errors import ConfigError, CoreEntryError, NonConvergenceError, NotEscapingError
from .potentials import R_MIN, Perturbation, RadialPotential, TotalPotential, zero_perturbation
from .radial import Trajectory


@dataclass(frozen=True, eq=False)
class FieldPotential:
    """Potential on R^d given by value and gradient callables on (..., d) arrays."""

    value: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    name: str = "custom"


def free_potential() -> FieldPotential:
    return FieldPotential(lambda x: np.zeros(np.shape(x)[:-1]), lambda x: np.zeros(np.shape(x)),
                          "free")


def as_field(pot, pert: Perturbation | None = None):
    """Accept a RadialPotential (optionally with a perturbation) or anything with value/grad."""
    if isinstance(pot, RadialPotential):
        return TotalPotential(pot, pert if pert is not None else zero_perturbation())
    if not (hasattr(pot, "value") and hasattr(pot, "grad")):
        raise ConfigError("potential must provide value(x) and grad(x)")
    return pot


def integrate_newton(potential_total, x0, v0, t_span, tol: float = 1e-10, t_eval=None,
                     method: str = "RK45") -> Trajectory:
    """Integrate x'' = -grad V(x) with an adaptive embedded Runge-Kutta pair.

    ``tol`` is used as both relative and absolute local error tolerance.  The
    orbit must stay in |x| >= 1; entering the core raises CoreEntryError.
    """
    if not (1e-13 <= tol <= 1e-6):
        raise ConfigError("tol must lie in [1e-13, 1e-6]")
    V = as_field(potential_total)
    x0 = np.asarray(x0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    if x0.shape != v0.shape or x0.ndim != 1:
        raise ConfigError("x0 and v0 must be vectors of equal length")
    if np.linalg.norm(x0) < R_MIN:
        raise ConfigError("|x0| must be at least 1")
    d = x0.size
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ConfigError("t_span must be increasing")

    def rhs(_t, u):
        return np.concatenate((u[d:], -np.asarray(V.grad(u[:d]), dtype=float)))

    def core(_t, u):
        return float(u[:d] @ u[:d]) - R_MIN

    core.terminal = True
    core.direction = -1
    te = None if t_eval is None else np.asarray(t_eval, dtype=float)
    sol = solve_ivp(rhs, (t0, t1), np.concatenate((x0, v0)), method=method, rtol=tol,
                    atol=tol, t_eval=te, events=core)
    if sol.status == 1:
        raise CoreEntryError(f"orbit entered |x| < 1 at t = {sol.t_events[0][0]:.6g}")
    if sol.status != 0:
        raise NonConvergenceError(f"integration failed: {sol.message}")
    lam = float(0.5 * v0 @ v0 + V.value(x0))
    return Trajectory(sol.t, sol.y[:d].T.copy(), sol.y[d:].T.copy(), lam)


def energy_drift(traj: Trajectory, potential_total) -> float:
    """max_t |E(t) - E(t0)| along the samples."""
    e = traj.energies(as_field(potential_total))
    return float(np.max(np.abs(e - e[0])))


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _window(times: np.ndarray, decades: float = 2.0) -> np.ndarray:
    """Indices of samples in the last ``decades`` decades of positive time."""
    t_end = times[-1]
    return np.nonzero(times >= t_end * 10.0 ** (-decades))[0]


def loglog_slope(t: np.ndarray, y: np.ndarray) -> float:
    """Least-squares slope of log y against log t (nonpositive samples dropped)."""
    m = (t > 0) & (y > 0)
    if np.count_nonzero(m) < 2:
        return math.nan
    return float(np.polyfit(np.log(t[m]), np.log(y[m]), 1)[0])


def _geometric_samples(traj: Trajectory, decades: float, n: int = 41):
    """Positions/velocities interpolated (in ln t) on n geometric times over the window."""
    t = traj.times
    t_end = t[-1]
    t_start = t_end * 10.0 ** (-decades)
    if t[0] > t_start or t_start <= 0:
        raise NotEscapingError("trajectory too short for a two-decade window")
    tg = np.geomspace(t_start, t_end, n)
    lt = np.log(np.maximum(t, 1e-300))

    def interp(a):
        return np.stack([np.interp(np.log(tg), lt, a[:, k]) for k in range(a.shape[1])], axis=1)

    return tg, interp(traj.positions), interp(traj.velocities)


def _extrapolate(tg: np.ndarray, dirs: np.ndarray, p: float) -> np.ndarray:
    """Limit of u(t) = u+ + a t^-p + b t^-2p, fitted by linear least squares on the window.

    This is Richardson extrapolation with the fitted exponent; with no
    measurable decay the last sample is returned.
    """
    if not np.isfinite(p) or p <= 0:
        return _unit(dirs[-1])
    s = tg / tg[-1]
    A = np.stack((np.ones_like(s), s**-p, s ** (-2 * p)), axis=1)
    coef, *_ = np.linalg.lstsq(A, dirs, rcond=None)
    return _unit(coef[0])


def _difference_rate(tg: np.ndarray, dirs: np.ndarray) -> float:
    """Decay exponent p of |u(t) - u+| ~ t^-p from successive differences on a geometric grid."""
    diffs = np.linalg.norm(np.diff(dirs, axis=0), axis=1)
    tm = np.sqrt(tg[1:] * tg[:-1])
    if np.all(diffs == 0):
        return math.inf
    return -loglog_slope(tm, diffs)


def angular_momentum(traj: Trajectory) -> np.ndarray:
    """|L(t)| with L^2 = x^2 v^2 - (x.v)^2."""
    x, v = traj.positions, traj.velocities
    l2 = np.sum(x * x, 1) * np.sum(v * v, 1) - np.sum(x * v, 1) ** 2
    return np.sqrt(np.maximum(l2, 0.0))


def angular_momentum_components(traj: Trajectory) -> np.ndarray:
    """L_ij = x_i v_j - x_j v_i for i < j, shape (n, d(d-1)/2)."""
    x, v = traj.positions, traj.velocities
    d = traj.dim
    cols = [x[:, i] * v[:, j] - x[:, j] * v[:, i] for i in range(d) for j in range(i + 1, d)]
    return np.stack(cols, axis=1)


@dataclass
class AsymptoticReport:
    omega_plus: np.ndarray
    omega_tilde_plus: np.ndarray
    decay_exponent_fit: float
    velocity_decay_exponent_fit: float
    virial_pass: dict = field(default_factory=dict)
    angular_momentum_growth: float = math.nan
    position_growth: float = math.nan
    speed_growth: float = math.nan

    @property
    def direction_gap(self) -> float:
        return float(np.linalg.norm(self.omega_plus - self.omega_tilde_plus))

    def to_dict(self) -> dict:
        return {"omega_plus": self.omega_plus.tolist(),
                "omega_tilde_plus": self.omega_tilde_plus.tolist(),
                "decay_exponent_fit": self.decay_exponent_fit,
                "velocity_decay_exponent_fit": self.velocity_decay_exponent_fit,
                "virial_pass": self.virial_pass,
                "angular_momentum_growth": self.angular_momentum_growth,
                "position_growth": self.position_growth, "speed_growth": self.speed_growth,
                "direction_gap": self.direction_gap}


def omega_plus(traj: Trajectory, decades: float = 2.0) -> AsymptoticReport:
    """Asymptotic directions of x(t) and dx/dt, with fitted approach rates.

    The rates are least-squares fits of the successive differences of x/|x|
    and v/|v| on a geometric sub-grid of the last ``decades`` decades; both
    limits are then extrapolated with the position rate (terms t^-p, t^-2p).
    """
    r = np.linalg.norm(traj.positions, axis=1)
    if r[-1] < 100.0 * r.min():
        raise NotEscapingError("trajectory does not reach 100 times its closest approach")
    idx = _window(traj.times, 1.0)
    if np.any(np.diff(r[idx]) <= 0):
        raise NotEscapingError("|x| is not increasing over the last decade")
    tg, xg, vg = _geometric_samples(traj, decades)
    wx, wv = _unit(xg), _unit(vg)
    px, pv = _difference_rate(tg, wx), _difference_rate(tg, wv)
    rep = AsymptoticReport(_extrapolate(tg, wx, px), _extrapolate(tg, wv, px), px, pv)
    lmag = np.linalg.norm(angular_momentum_components(traj), axis=1)
    w = _window(traj.times, decades)
    rep.angular_momentum_growth = loglog_slope(traj.times[w], lmag[w])
    rep.position_growth = loglog_slope(traj.times[w], r[w])
    rep.speed_growth = loglog_slope(traj.times[w], np.linalg.norm(traj.velocities[w], axis=1))
    return rep


def virial_check(traj: Trajectory, pot: RadialPotential | None = None,
                 pert: Perturbation | None = None, R: float = R_MIN, rtol: float = 1e-8,
                 growth_tol: float = 0.02) -> dict:
    """Virial lower bounds after the first outgoing time T and growth-exponent fits.

    Checks x.v >= 2 lam (t - T) and |x|^2 >= 2 lam (t - T)^2 + |x(T)|^2 for
    t >= T, where T is the first sample with x.v >= 0 and |x| > R.  Growth
    exponents of |x| and |v| are fitted on the last two decades and compared
    with (alpha, alpha - 1) at zero energy or (1, 0) at positive energy.
    """
    x, v, t = traj.positions, traj.velocities, traj.times
    lam = traj.lam
    if pot is not None:
        e = traj.energies(as_field(pot, pert))
        lam = float(np.mean(e))
        # energies at rounding level of the potential count as threshold energy
        if abs(lam) <= 1e-9 * max(1.0, float(np.max(np.abs(e - 0.5 * np.sum(v * v, 1))))):
            lam = 0.0
    xv = np.sum(x * v, axis=1)
    r = np.linalg.norm(x, axis=1)
    cand = np.nonzero((xv >= 0) & (r > R))[0]
    if cand.size == 0:
        return {"T": None, "virial_velocity": False, "virial_position": False}
    k = int(cand[0])
    T = float(t[k])
    tt = t[k:] - T
    scale_v = np.maximum(np.abs(xv[k:]), 1.0)
    scale_x = np.maximum(r[k:] ** 2, 1.0)
    m_v = float(np.min((xv[k:] - 2 * lam * tt) / scale_v))
    m_x = float(np.min((r[k:] ** 2 - 2 * lam * tt**2 - r[k] ** 2) / scale_x))
    w = _window(t, 2.0)
    pg = loglog_slope(t[w], r[w])
    sg = loglog_slope(t[w], np.linalg.norm(v[w], axis=1))
    out = {"T": T, "lambda": lam, "virial_velocity": m_v >= -rtol, "virial_position": m_x >= -rtol,
           "virial_velocity_margin": m_v, "virial_position_margin": m_x,
           "position_growth": pg, "speed_growth": sg}
    if pot is not None:
        a = pot.alpha
        exp_p, exp_s = (a, a - 1.0) if lam == 0 else (1.0, 0.0)
        out.update(position_growth_expected=exp_p, speed_growth_expected=exp_s,
                   position_growth_pass=abs(pg - exp_p) <= growth_tol,
                   speed_growth_pass=abs(sg - exp_s) <= growth_tol)
    return out


# ----------------------------------------------------------------------------
# logarithmic spiral
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class SpiralParams:
    """V = r^-mu chi(theta - c ln r) with chi(s) = -A - B sin s."""

    mu: float
    c: float
    A: float
    B: float

    @property
    def alpha(self) -> float:
        return 2.0 / (2.0 + self.mu)

    @property
    def amplitude(self) -> float:
        """a in r(t) = a t^alpha along the spiral orbit."""
        a = self.alpha
        return (self.B / (self.c * a * (2 * a - 1))) ** (1.0 / (self.mu + 2))


def spiral_amplitude_ratio(mu: float, c: float) -> float:
    """A/B making theta = c ln r an exact zero-energy orbit."""
    a = 2.0 / (2.0 + mu)
    return (1.0 - a) * (c + 1.0 / c) / (mu * (2.0 * a - 1.0))


def spiral_potential(p: SpiralParams) -> FieldPotential:
    def parts(x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        th = np.arctan2(x[..., 1], x[..., 0])
        s = th - p.c * np.log(r)
        return x, r, s

    def value(x):
        _, r, s = parts(x)
        return r ** -p.mu * (-p.A - p.B * np.sin(s))

    def grad(x):
        x, r, s = parts(x)
        chi = -p.A - p.B * np.sin(s)
        dchi = -p.B * np.cos(s)
        dv_dr = r ** (-p.mu - 1) * (-p.mu * chi - p.c * dchi)
        dv_dth = r ** -p.mu * dchi
        er = x / r[..., None]
        eth = np.stack((-er[..., 1], er[..., 0]), axis=-1)
        return dv_dr[..., None] * er + (dv_dth / r)[..., None] * eth

    return FieldPotential(value, grad, "spiral")


def spiral_example(mu: float, c: float, B: float, r0: float = 1.0, span: float = 1e3,
                   tol: float = 1e-12, n_samples: int = 400):
    """Integrate the spiral orbit from r0 out to (slightly beyond) span * r0.

    Returns (SpiralParams, Trajectory, drift) with drift = sup_t |theta(t) - c ln r(t)|
    (angles unwrapped).
    """
    if not (0 < mu < 2) or c <= 0 or B <= 0:
        raise ConfigError("need 0 < mu < 2, c > 0 and B > 0")
    A = spiral_amplitude_ratio(mu, c) * B
    if A <= B:
        raise ConfigError(f"infeasible spiral: A = {A:.6g} <= B = {B:.6g}, chi is not negative")
    p = SpiralParams(float(mu), float(c), float(A), float(B))
    alpha = p.alpha
    a = p.amplitude
    t0 = (r0 / a) ** (1.0 / alpha)
    # run slightly past span * r0 so the sampled orbit covers the full range
    t1 = t0 * (1.001 * span) ** (1.0 / alpha)
    th0 = c * math.log(r0)
    er = np.array([math.cos(th0), math.sin(th0)])
    eth = np.array([-er[1], er[0]])
    rdot = alpha * r0 / t0
    x0 = r0 * er
    v0 = rdot * er + r0 * (c * alpha / t0) * eth
    traj = integrate_newton(spiral_potential(p), x0, v0, (t0, t1), tol=tol,
                            t_eval=np.geomspace(t0, t1, n_samples))
    r = np.linalg.norm(traj.positions, axis=1)
    th = np.unwrap(np.arctan2(traj.positions[:, 1], traj.positions[:, 0]))
    th += th0 - th[0]
    drift = float(np.max(np.abs(th - c * np.log(r))))
    return p, traj, drift


def swept_angle(traj: Trajectory) -> float:
    """Total unwrapped polar angle swept by a planar trajectory."""
    th = np.unwrap(np.arctan2(traj.positions[:, 1], traj.positions[:, 0]))
    return float(abs(th[-1] - th[0]))
