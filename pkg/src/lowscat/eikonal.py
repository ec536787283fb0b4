"""Phase function of the velocity field, eikonal checks and orbit classification.

The phase is the line integral of F from R0 omega to x along the straight
segment, plus sqrt(2 lam) R0.  Its finite-difference gradient is compared
with F, the eikonal identity 1/2 |grad phi|^2 + V = lam is checked, and the
curl of F is measured directly.  Two further routes give the same phase:
arc-then-ray integration of F, and (for V2 = 0) the closed quadrature in
terms of the radial speed and the angular momentum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline

from ._quad import gauss_legendre_unit
from .asymptotics import omega_plus as _omega_plus
from .errors import ConeError, ConfigError, NoMatchError, NumericalError
from .linforce import hardy_margin, log_grid, CoefficientPath
from .perturbed import FIXED_POINT_TOL, T_MAX, default_eps_bar, solve_mixed_perturbed
from .potentials import (Perturbation, RadialPotential, TotalPotential, check_conditions,
                         t_tilde, zero_perturbation)
from .radial import Cone, L_of_theta1, ScatteringData, Trajectory, _speed, radial_field

EIKONAL_NODES = 1000
PHASE_TOL = 1e-11
MAX_PHASE_NODES = 128


class FieldEvaluator:
    """F(x) for fixed (omega, lam); perturbed solves share one time grid and may be warm-started."""

    def __init__(self, pot: RadialPotential, pert: Perturbation | None, omega, lam: float,
                 grid=None, tol: float = FIXED_POINT_TOL):
        self.pot = pot
        w = np.asarray(omega, dtype=float)
        self.omega = w / np.linalg.norm(w)
        self.pert = zero_perturbation(self.omega.size) if pert is None else pert
        self.lam = float(lam)
        self.radial = self.pert.is_zero
        self.grid = log_grid(T_MAX, EIKONAL_NODES) if grid is None else np.asarray(grid, float)
        self.tol = tol
        self.n_solves = 0

    def __call__(self, x, z0=None):
        """Return (F(x), z) where z is the fixed point on the grid (None when V2 = 0)."""
        self.n_solves += 1
        if self.radial:
            return radial_field(self.pot, x, self.omega, self.lam), None
        data = ScatteringData(x, self.omega, self.lam)
        z, _, fs, _ = solve_mixed_perturbed(self.pot, self.pert, data, grid=self.grid,
                                            tol=self.tol, z0=z0)
        return fs.F, z.values


def _evaluator(pot, pert, omega, lam, evaluator):
    if evaluator is not None:
        return evaluator
    return FieldEvaluator(pot, pert, omega, lam)


@dataclass(frozen=True, eq=False)
class PhaseSample:
    x: np.ndarray
    omega: np.ndarray
    lam: float
    phi: float
    grad_phi: np.ndarray
    F: np.ndarray | None = None
    fd_error_estimate: float = math.nan
    step: float = math.nan


# ----------------------------------------------------------------------------
# quadrature rules along the integration paths
# ----------------------------------------------------------------------------

def _graded_rule(ratio: float, n: int):
    """Rule on [0, 1] for integrands scaling like powers of 1 + (ratio - 1) l.

    Substitutes l = (ratio^u - 1)/(ratio - 1) and applies n-point Gauss in u.
    """
    u, w = gauss_legendre_unit(n)
    lr = math.log(ratio)
    if lr < 1e-8:
        return u.copy(), w.copy()
    em = math.expm1(lr)
    l = np.expm1(u * lr) / em
    dl = np.exp(u * lr) * lr / em * w
    return l, dl


def _check_segment(x: np.ndarray, omega: np.ndarray, R0: float, sigma: float | None):
    a = R0 * omega
    d = x - a
    dd = float(d @ d)
    lmin = 0.0 if dd == 0 else min(1.0, max(0.0, -float(a @ d) / dd))
    if np.linalg.norm(a + lmin * d) < R0 * (1 - 1e-12):
        raise ConeError("segment from R0 omega to x dips below radius R0")
    if sigma is not None:
        cone = Cone(R0, sigma, omega)
        if cone.margin(x) < 0:
            raise ConeError("x lies outside the outgoing cone")


def _segment_phase(F, x, omega, R0, lam, n, warm=None):
    """(phi, zs) with an n-node graded rule on the segment; warm holds z per node."""
    a = R0 * omega
    d = x - a
    r = float(np.linalg.norm(x))
    if np.linalg.norm(d) == 0.0:
        return math.sqrt(2 * lam) * R0, []
    l, dl = _graded_rule(max(r / R0, 1.0), n)
    total = 0.0
    zs = []
    for k in range(n):
        Fk, zk = F(a + l[k] * d, None if warm is None else warm[k])
        zs.append(zk)
        total += dl[k] * float(Fk @ d)
    return total + math.sqrt(2 * lam) * R0, zs


def phase(pot: RadialPotential, pert: Perturbation | None, x, omega, lam: float, R0: float,
          sigma: float | None = None, n: int | None = None, tol: float = PHASE_TOL,
          evaluator: FieldEvaluator | None = None, details: bool = False):
    """phi(x) = (x - R0 omega) . int_0^1 F(l (x - R0 omega) + R0 omega) dl + sqrt(2 lam) R0.

    The l-integral uses Gauss rules graded geometrically in |x| / R0; the
    node count doubles from 8 until two successive values agree to ``tol``
    (relative).  Pass ``n`` to use a fixed rule.  With ``details`` returns
    (phi, n, node solutions) where n is the smaller of the two agreeing rules,
    for reuse by gradient stencils.
    """
    x = np.asarray(x, dtype=float)
    w = np.asarray(omega, dtype=float)
    w = w / np.linalg.norm(w)
    if np.linalg.norm(x) < R0 * (1 - 1e-12):
        raise ConeError("|x| must be at least R0")
    _check_segment(x, w, R0, sigma)
    F = _evaluator(pot, pert, w, lam, evaluator)
    if n is not None:
        phi, zs = _segment_phase(F, x, w, R0, lam, n)
        return (phi, n, zs) if details else phi
    m = 8
    prev, zs_prev = _segment_phase(F, x, w, R0, lam, m)
    while True:
        cur, zs = _segment_phase(F, x, w, R0, lam, 2 * m)
        if abs(cur - prev) <= tol * max(1.0, abs(cur)):
            # the m-node rule is certified by the 2m-node one; stencils reuse it
            return (cur, m, zs_prev) if details else cur
        m *= 2
        if m >= MAX_PHASE_NODES:
            raise NumericalError(f"phase quadrature did not settle (last change {cur - prev:.3e})")
        prev, zs_prev = cur, zs


def incoming_phase(pot: RadialPotential, pert: Perturbation | None, x, omega, lam: float,
                   R0: float, sigma: float | None = None, **kwargs) -> float:
    """phi-(x, omega, lam) = -phi+(x, -omega, lam) on the incoming cone."""
    return -phase(pot, pert, x, -np.asarray(omega, dtype=float), lam, R0, sigma, **kwargs)


def _arc_basis(x: np.ndarray, omega: np.ndarray):
    xh = x / np.linalg.norm(x)
    c = float(np.clip(xh @ omega, -1.0, 1.0))
    perp = xh - c * omega
    s = float(np.linalg.norm(perp))
    if s < 1e-14:
        return 0.0, np.zeros_like(x)
    return math.atan2(s, c), perp / s


def phase_arc_ray(pot: RadialPotential, pert: Perturbation | None, x, omega, lam: float,
                  R0: float, n: int | None = None, tol: float = PHASE_TOL,
                  evaluator: FieldEvaluator | None = None) -> float:
    """Phase integrated along the great-circle arc R0 omega -> R0 x/|x|, then the ray to x."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(omega, dtype=float)
    w = w / np.linalg.norm(w)
    r = float(np.linalg.norm(x))
    if r < R0 * (1 - 1e-12):
        raise ConeError("|x| must be at least R0")
    F = _evaluator(pot, pert, w, lam, evaluator)
    beta, e = _arc_basis(x, w)
    xh = x / r

    def route(m):
        total = math.sqrt(2 * lam) * R0
        if beta > 0:
            u, wt = gauss_legendre_unit(m)
            for b, wb in zip(beta * u, beta * wt):
                p = R0 * (math.cos(b) * w + math.sin(b) * e)
                tangent = R0 * (-math.sin(b) * w + math.cos(b) * e)
                total += wb * float(F(p)[0] @ tangent)
        if r > R0:
            l, dl = _graded_rule(r / R0, m)
            for lk, wk in zip(l, dl):
                p = (R0 + lk * (r - R0)) * xh
                total += wk * (r - R0) * float(F(p)[0] @ xh)
        return total

    if n is not None:
        return route(n)
    m = 8
    prev = route(m)
    while True:
        m *= 2
        cur = route(m)
        if abs(cur - prev) <= tol * max(1.0, abs(cur)):
            return cur
        if m >= MAX_PHASE_NODES:
            raise NumericalError("arc-ray quadrature did not settle")
        prev = cur


def phase_radial(pot: RadialPotential, x, omega, lam: float, R0: float,
                 epsrel: float = 1e-12) -> float:
    """Phase for V2 = 0 from the radial speed and the shooting angular momentum.

    phi = sqrt(2 lam) R0 - int_{theta1}^0 L(R0, b) db
          + int_{R0}^{|x|} g(rho) sqrt(1 - kappa^2) drho,   kappa = L(rho, theta1) / (rho g(rho)),
    where theta1 <= 0 is the angle between x and omega and L(rho, theta) the
    angular momentum of the radial mixed problem from radius rho at angle theta.
    The integrals use adaptive quadrature.
    """
    x = np.asarray(x, dtype=float)
    data = ScatteringData(x, omega, lam)
    r = data.r1
    th = data.theta1()
    if r < R0 * (1 - 1e-12):
        raise ConeError("|x| must be at least R0")
    arc = 0.0
    if th < 0:
        arc, _ = quad(lambda b: L_of_theta1(pot, lam, R0, b), th, 0.0, epsabs=0.0,
                      epsrel=epsrel, limit=200)

    def radial_speed(rho):
        g = float(_speed(pot, lam, rho))
        if th == 0:
            return g
        kap = L_of_theta1(pot, lam, rho, th) / (rho * g)
        return g * math.sqrt((1.0 - kap) * (1.0 + kap))

    ray = 0.0
    if r > R0:
        # integrate in log(rho) so the integrand is smooth on a bounded scale
        ray, _ = quad(lambda s: radial_speed(R0 * math.exp(s)) * R0 * math.exp(s), 0.0,
                      math.log(r / R0), epsabs=0.0, epsrel=epsrel, limit=200)
    return math.sqrt(2 * lam) * R0 - arc + ray


# ----------------------------------------------------------------------------
# gradient, eikonal residual, curl
# ----------------------------------------------------------------------------

def _stencil_step(x, omega, R0, sigma, rel_step, max_halvings=12) -> float:
    """Largest step |x| rel_step 2^-k keeping the 5-point stencil inside the cone."""
    h = rel_step * float(np.linalg.norm(x))
    cone = Cone(R0, sigma, omega) if sigma is not None else None
    d = x.size
    for _ in range(max_halvings):
        pts = [x + s * h * np.eye(d)[k] for k in range(d) for s in (-2, -1, 1, 2)]
        if all(np.linalg.norm(p) >= R0 for p in pts) and (
                cone is None or all(cone.margin(p) >= 0 for p in pts)):
            return h
        h *= 0.5
    raise ConeError("finite-difference stencil leaves the cone")


def phase_gradient(pot: RadialPotential, pert: Perturbation | None, x, omega, lam: float,
                   R0: float, sigma: float | None = None, rel_step: float = 1e-4,
                   evaluator: FieldEvaluator | None = None) -> PhaseSample:
    """Five-point central-difference gradient of the phase.

    The node count is certified adaptively at x and then frozen across the
    stencil, so the differences see one smooth quadrature of phi.  Solves at
    stencil nodes are warm-started from the centre solutions.
    """
    x = np.asarray(x, dtype=float)
    w = np.asarray(omega, dtype=float)
    w = w / np.linalg.norm(w)
    F = _evaluator(pot, pert, w, lam, evaluator)
    h = _stencil_step(x, w, R0, sigma, rel_step)
    phi0, n, zs = phase(pot, pert, x, w, lam, R0, sigma, evaluator=F, details=True)
    warm = zs if zs and zs[0] is not None else None
    d = x.size
    g5 = np.empty(d)
    g3 = np.empty(d)
    for k in range(d):
        e = np.zeros(d)
        e[k] = h
        vals = {}
        for s in (-2, -1, 1, 2):
            vals[s], _ = _segment_phase(F, x + s * e, w, R0, lam, n, warm)
        g5[k] = (vals[-2] - 8 * vals[-1] + 8 * vals[1] - vals[2]) / (12 * h)
        g3[k] = (vals[2] - vals[-2]) / (4 * h)
    Fx, _ = F(x, warm[-1] if warm else None)
    return PhaseSample(x, w, lam, phi0, g5, Fx, float(np.linalg.norm(g5 - g3)), h)


@dataclass
class EikonalCheck:
    residual: float
    gradient_error: float
    energy_identity: float
    scale: float
    sample: PhaseSample = field(repr=False)

    @property
    def relative_residual(self) -> float:
        return abs(self.residual) / self.scale

    @property
    def relative_gradient_error(self) -> float:
        return self.gradient_error / float(np.linalg.norm(self.sample.F))


def eikonal_residual(pot: RadialPotential, pert: Perturbation | None, x, omega, lam: float,
                     R0: float, sigma: float | None = None, rel_step: float = 1e-4,
                     evaluator: FieldEvaluator | None = None) -> EikonalCheck:
    """1/2 |grad phi|^2 + V(x) - lam with grad phi by finite differences, and |grad phi - F|."""
    pert_ = zero_perturbation(np.size(x)) if pert is None else pert
    s = phase_gradient(pot, pert_, x, omega, lam, R0, sigma, rel_step, evaluator)
    V = float(TotalPotential(pot, pert_).value(s.x))
    res = 0.5 * float(s.grad_phi @ s.grad_phi) + V - lam
    ident = 0.5 * float(s.F @ s.F) + V - lam
    return EikonalCheck(res, float(np.linalg.norm(s.grad_phi - s.F)), ident, abs(lam) + abs(V), s)


def field_jacobian(pot: RadialPotential, pert: Perturbation | None, x, omega, lam: float,
                   R0: float = 1.0, sigma: float | None = None, rel_step: float = 1e-4,
                   evaluator: FieldEvaluator | None = None) -> np.ndarray:
    """J[i, k] = dF_i/dx_k by five-point central differences."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(omega, dtype=float)
    w = w / np.linalg.norm(w)
    F = _evaluator(pot, pert, w, lam, evaluator)
    h = _stencil_step(x, w, R0, sigma, rel_step)
    _, z0 = F(x)
    d = x.size
    J = np.empty((d, d))
    for k in range(d):
        e = np.zeros(d)
        e[k] = h
        v = {s: F(x + s * e, z0)[0] for s in (-2, -1, 1, 2)}
        J[:, k] = (v[-2] - 8 * v[-1] + 8 * v[1] - v[2]) / (12 * h)
    return J


def curl_check(pot: RadialPotential, pert: Perturbation | None, x, omega, lam: float,
               R0: float = 1.0, sigma: float | None = None, rel_step: float = 1e-4,
               evaluator: FieldEvaluator | None = None) -> float:
    """max_{i<j} |d_i F_j - d_j F_i|."""
    J = field_jacobian(pot, pert, x, omega, lam, R0, sigma, rel_step, evaluator)
    A = J - J.T
    d = J.shape[0]
    return float(max(abs(A[i, j]) for i in range(d) for j in range(i + 1, d))) if d > 1 else 0.0


def cone_grid(omega, R_inner: float, R_outer: float, sigma: float, n_radii: int,
              n_angles: int, angle_fraction: float = 0.9) -> np.ndarray:
    """Points r (cos b omega + sin b e) with log-spaced r and b spread over the cone half-angle.

    ``e`` is a fixed unit vector orthogonal to omega; b ranges over
    [-angle_fraction, angle_fraction] times the cone half-angle acos(1 - sigma).
    """
    w = np.asarray(omega, dtype=float)
    w = w / np.linalg.norm(w)
    e = np.zeros_like(w)
    e[int(np.argmin(np.abs(w)))] = 1.0
    e -= (e @ w) * w
    e /= np.linalg.norm(e)
    half = math.acos(1.0 - sigma) * angle_fraction
    pts = [r * (math.cos(b) * w + math.sin(b) * e)
           for r in np.geomspace(R_inner, R_outer, n_radii)
           for b in np.linspace(-half, half, n_angles)]
    return np.array(pts)


def phase_lambda_continuity(pot: RadialPotential, pert: Perturbation | None, x, omega, R0: float,
                            lams=(1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)) -> dict:
    """|phi(x, omega, lam) - phi(x, omega, 0)| over decreasing lam."""
    p0 = phase(pot, pert, x, omega, 0.0, R0)
    devs = [abs(phase(pot, pert, x, omega, lam, R0) - p0) for lam in lams]
    return {"lambdas": list(lams), "deviations": devs,
            "monotone": all(devs[i + 1] < devs[i] for i in range(len(devs) - 1))}


# ----------------------------------------------------------------------------
# classification
# ----------------------------------------------------------------------------

@dataclass
class ClassificationResult:
    omega_plus: np.ndarray
    omega_minus: np.ndarray | None
    lam: float
    T0: float
    position_match: float
    velocity_match: float
    history: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"omega_plus": self.omega_plus.tolist(),
                "omega_minus": None if self.omega_minus is None else self.omega_minus.tolist(),
                "lambda": self.lam, "T0": self.T0, "position_match": self.position_match,
                "velocity_match": self.velocity_match, "history": self.history,
                "diagnostics": self.diagnostics}


def _tangent_basis(w: np.ndarray) -> np.ndarray:
    """Orthonormal basis (d-1, d) of the plane orthogonal to w."""
    q, _ = np.linalg.qr(np.column_stack([w, np.eye(w.size)]))
    return q[:, 1:w.size].T


def _mixed(pot, pert, x, w, lam, grid):
    return solve_mixed_perturbed(pot, pert, ScatteringData(x, w, lam), grid=grid)


def _spline(y: Trajectory) -> CubicHermiteSpline:
    return CubicHermiteSpline(y.times, y.positions, y.velocities, axis=0)


def _refine_direction(pot, pert, xT, lam, w0, s_end, x_end, grid, iters: int = 6):
    """Newton on omega so that the mixed orbit from xT points at x_end after time s_end - 1."""
    xe = x_end / np.linalg.norm(x_end)
    B = _tangent_basis(w0)

    def resid(c):
        w = w0 + B.T @ c
        w /= np.linalg.norm(w)
        y = _mixed(pot, pert, xT, w, lam, grid)[1]
        p = _spline(y)(s_end)
        return B @ (p / np.linalg.norm(p) - xe), w

    c = np.zeros(B.shape[0])
    r, w = resid(c)
    for _ in range(iters):
        if np.linalg.norm(r) < 1e-13:
            break
        step = 1e-7
        J = np.empty((B.shape[0], B.shape[0]))
        for k in range(B.shape[0]):
            dc = np.zeros_like(c)
            dc[k] = step
            J[:, k] = (resid(c + dc)[0] - r) / step
        try:
            c = c - np.linalg.solve(J, r)
        except np.linalg.LinAlgError:
            break
        r_new, w_new = resid(c)
        if np.linalg.norm(r_new) >= np.linalg.norm(r):
            r, w = r_new, w_new
            break
        r, w = r_new, w_new
    return w


def classify_orbit(pot: RadialPotential, pert: Perturbation | None, traj: Trajectory,
                   R0: float, sigma: float, tol: float = 1e-4, max_doublings: int = 20,
                   n_velocity_checks: int = 5, refine: bool = True,
                   backward: Trajectory | None = None, grid=None,
                   omega=None) -> ClassificationResult:
    """Find T0 such that the mixed-problem orbit from x(T0) reproduces x(t) on [T0, 10 T0].

    The search doubles T from the time the orbit enters the cone around
    omega+ for the last time.  omega+ comes from the asymptotics of ``traj`` (optionally refined by
    Newton matching of the direction at 10 T), lam from the energy at the
    last sample.  Velocities are compared with the field F = grad phi+ at
    log-spaced times of the window.  ``backward`` (the orbit integrated
    backwards in time from the start, with reversed velocity) supplies omega-.
    A known asymptotic direction may be passed as ``omega`` instead of being
    estimated, which helps when the approach to omega+ is very slow.
    """
    pert = zero_perturbation(traj.dim) if pert is None else pert
    V = TotalPotential(pot, pert)
    lam = float(traj.energies(V)[-1])
    if lam < 0:
        if lam > -1e-9 * max(1.0, abs(float(V.value(traj.positions[-1])))):
            lam = 0.0
        else:
            raise NoMatchError("negative energy: the orbit is bound")
    if omega is None:
        w = _omega_plus(traj).omega_plus
    else:
        w = np.asarray(omega, dtype=float)
        w = w / np.linalg.norm(w)
    w_minus = None
    if backward is not None:
        w_minus = -_omega_plus(backward).omega_plus
    cone = Cone(R0, sigma, w)
    t = traj.times
    # start of the final stretch inside the cone: earlier visits belong to
    # windings that a mixed-problem orbit from that point cannot reproduce
    inside = cone.contains(traj.positions) & (t > 0)
    if not inside[-1]:
        raise NoMatchError("the orbit does not end inside the outgoing cone")
    outside = np.nonzero(~inside)[0]
    T = float(t[0 if outside.size == 0 else outside[-1] + 1])
    grid = log_grid(T_MAX, 4000) if grid is None else grid
    history = []
    for _ in range(max_doublings + 1):
        if 10 * T > t[-1] or 10 * T > grid[-1]:
            break
        k = int(np.searchsorted(t, T))
        Tk = float(t[k])
        win = np.nonzero((t >= Tk) & (t <= 10 * Tk))[0]
        xT = traj.positions[k]
        if not cone.contains(xT):
            history.append({"T": Tk, "status": "outside cone"})
            T *= 2
            continue
        try:
            wk = w
            if refine:
                wk = _refine_direction(pot, pert, xT, lam, w, t[win[-1]] - Tk + 1.0,
                                       traj.positions[win[-1]], grid)
            if not Cone(R0, sigma, wk).contains(xT):
                history.append({"T": Tk, "status": "outside cone after refinement"})
                T *= 2
                continue
            y = _mixed(pot, pert, xT, wk, lam, grid)[1]
        except (NumericalError, ConeError) as exc:
            history.append({"T": Tk, "status": f"mixed solve failed: {exc}"})
            T *= 2
            continue
        ys = _spline(y)(t[win] - Tk + 1.0)
        xw = traj.positions[win]
        pos_err = float(np.max(np.linalg.norm(xw - ys, axis=1) / np.linalg.norm(xw, axis=1)))
        F = FieldEvaluator(pot, pert, wk, lam, grid=grid)
        checks = np.unique(np.searchsorted(t, np.geomspace(Tk, t[win[-1]], n_velocity_checks)))
        vel_err = 0.0
        for i in checks:
            r = float(np.linalg.norm(traj.positions[i]))
            gr = float(_speed(pot, lam, r))
            vel_err = max(vel_err, float(np.linalg.norm(traj.velocities[i] - F(traj.positions[i])[0])) / gr)
        history.append({"T": Tk, "position_match": pos_err, "velocity_match": vel_err})
        if pos_err <= tol and vel_err <= tol:
            diag = _match_diagnostics(pot, pert, y, t[win[-1]] - Tk + 1.0)
            return ClassificationResult(wk, w_minus, lam, Tk, pos_err, vel_err, history, diag)
        T *= 2
    raise NoMatchError(f"no matching time found; history: {history}")


def _match_diagnostics(pot, pert, y: Trajectory, s_end: float) -> dict:
    """Sufficient-condition report along the matched mixed orbit."""
    m = (y.times > 1.0) & (y.times <= s_end)
    ts = y.times[m]
    rs = np.linalg.norm(y.positions[m], axis=1)
    sel = np.unique(np.linspace(0, ts.size - 1, min(12, ts.size)).astype(int)) if ts.size else []
    ratio = [float((ts[i] - 1.0) / t_tilde(pot, max(1.0, rs[i]))) for i in sel]
    q = -TotalPotential(pot, pert).hess(y.positions)
    eb = default_eps_bar(pot, pert)
    rep = check_conditions(pot, pert)
    return {"time_ratio_max": max(ratio) if ratio else math.nan,
            "hardy_margin": hardy_margin(CoefficientPath.from_samples(y.times, q, eb), y.times),
            "eps_bar": eb, "speed_ratio_margin": rep.margins.get("speed_ratio_bound", math.nan)}
