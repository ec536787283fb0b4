"""Two-dimensional radial mixed problem, solved by quadrature and shooting.

In the orbit plane the asymptotic direction is the first axis, the orbit
starts at angle theta1 <= 0 (for L >= 0) and the polar angle increases to 0
as t -> infinity.  Everything is phrased through

    Q(r) = r^2 (2 lambda - 2 V1(r)),      N(r) = Q(r) - L^2 = r^2 f(r),

where f is the squared radial velocity.  Q is increasing (virial condition),
so N has at most one zero, the turning point.  Near the starting radius r0 the
difference Q(r) - Q(r0) is formed from an average of V1' to avoid cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize

from ._quad import gauss_legendre_unit, graded_unit_rule, mean_on_segment
from .errors import (AdmissibilityError, ConeError, ConfigError, DomainError,
                     NoTurningPointError, NonConvergenceError, QuadratureError)
from .potentials import R_MIN, RadialPotential, _check_radius

KAPPA0_SQ = 0.99
_INNER_LEVELS = 44
_PANEL_N = 8
_PANELS_PER_OCTAVE = 4


# ----------------------------------------------------------------------------
# data types
# ----------------------------------------------------------------------------

def normalize_direction(omega, tol: float = 1e-8) -> np.ndarray:
    """Return omega as a unit vector; reject vectors whose norm is off by more than tol."""
    w = np.asarray(omega, dtype=float)
    if w.ndim != 1 or w.size < 2 or not np.all(np.isfinite(w)):
        raise ConfigError("direction must be a finite vector of dimension >= 2")
    n = float(np.linalg.norm(w))
    if abs(1.0 - n) > tol:
        raise ConfigError(f"direction is not a unit vector (norm {n!r})")
    return w / n


@dataclass(frozen=True, eq=False)
class ScatteringData:
    """Mixed-problem data: initial position x, asymptotic direction omega, energy lam."""

    x: np.ndarray
    omega: np.ndarray
    lam: float

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        w = normalize_direction(self.omega)
        if x.shape != w.shape:
            raise ConfigError("x and omega must have the same dimension")
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) < R_MIN:
            raise DomainError("initial position must satisfy |x| >= 1")
        if not (math.isfinite(self.lam) and self.lam >= 0):
            raise DomainError("energy must be finite and non-negative")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "omega", w)
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def dim(self) -> int:
        return self.x.size

    @property
    def r1(self) -> float:
        return float(np.linalg.norm(self.x))

    def cos_angle(self) -> float:
        return float(np.clip(self.x @ self.omega / self.r1, -1.0, 1.0))

    def theta1(self) -> float:
        """Signed initial angle (<= 0) between x and omega, computed without arccos loss."""
        xh = self.x / self.r1
        c = xh @ self.omega
        s = np.linalg.norm(xh - c * self.omega)
        return -math.atan2(float(s), float(c))

    def in_cone(self, R: float, sigma: float, sign: int = 1) -> bool:
        return bool(Cone(R, sigma, self.omega, sign).contains(self.x))


@dataclass(frozen=True, eq=False)
class Cone:
    """Outgoing (sign=+1) or incoming (sign=-1) cone around omega beyond radius R."""

    R: float
    sigma: float
    omega: np.ndarray
    sign: int = 1

    def __post_init__(self):
        if self.R < R_MIN or not (0.0 < self.sigma < 1.0) or self.sign not in (1, -1):
            raise ConfigError("cone needs R >= 1, 0 < sigma < 1 and sign = +-1")
        object.__setattr__(self, "omega", normalize_direction(self.omega))

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        c = x @ self.omega
        if self.sign > 0:
            return (c >= (1.0 - self.sigma) * r) & (r >= self.R)
        return (c <= (self.sigma - 1.0) * r) & (r >= self.R)

    def margin(self, x):
        """Signed slack of the angular condition, scaled by |x|; negative outside."""
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        return self.sign * (x @ self.omega) / r - (1.0 - self.sigma)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled orbit: strictly increasing times, positions and velocities, energy."""

    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    lam: float

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or (t.size > 1 and np.any(np.diff(t) <= 0)):
            raise ConfigError("trajectory times must be strictly increasing")

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    def energies(self, potential) -> np.ndarray:
        """Kinetic plus potential energy at every sample (``potential.value`` on positions)."""
        return 0.5 * np.sum(self.velocities**2, axis=1) + potential.value(self.positions)


# ----------------------------------------------------------------------------
# radial building blocks
# ----------------------------------------------------------------------------

def _q(pot: RadialPotential, lam: float, r):
    return r * r * (2.0 * lam - 2.0 * pot._v(r))


def _q_prime(pot: RadialPotential, lam: float, r):
    return 2.0 * r * (2.0 * lam - 2.0 * pot._v(r)) - 2.0 * r * r * pot._d(r, 1)


def _dq(pot: RadialPotential, lam: float, r0: float, r):
    """Divided difference (Q(r) - Q(r0)) / (r - r0) without cancellation."""
    mean_dv = mean_on_segment(lambda s: pot._d(s, 1), np.full_like(r, r0), r)
    return (r + r0) * (2.0 * lam - 2.0 * pot._v(r)) - 2.0 * r0 * r0 * mean_dv


def _outer_exponent(pot: RadialPotential) -> float:
    return 2.0 / (2.0 - pot.mu)


@lru_cache(maxsize=32)
def _outer_rule_k(k: float):
    """Graded rule on [0, 1] in v for r = r_base v^-k.

    Panels have ratio 2^(1/m) with m = ceil(k), i.e. about a factor 2 in r,
    down to v_min with r_base v_min^-k of order 1e120; the last panel is [0, v_min].
    """
    m = max(1, math.ceil(k))
    levels = int(min(56, 398.0 / k))
    j = np.arange(levels * m, -1, -1, dtype=float)
    edges = np.concatenate(([0.0], 2.0 ** (-j / m)))
    x, w = gauss_legendre_unit(_PANEL_N)
    a = edges[:-1, None]
    h = np.diff(edges)[:, None]
    v = (a + h * x).ravel()
    wv = (h * w).ravel()
    v.setflags(write=False)
    wv.setflags(write=False)
    return v, wv


def _outer_integrals(pot: RadialPotential, lam: float, r_base: float, l2: float,
                     derivative: bool = False) -> tuple[float, float]:
    """Integrals of 1/(r sqrt(N)) and 1/(r N^{3/2}) over [r_base, infinity).

    The substitution r = r_base v^-k, k = 2/(2 - mu), makes the zero-energy
    integrand bounded at v = 0.
    """
    k = _outer_exponent(pot)
    v, w = _outer_rule_k(k)
    r = r_base * v**-k
    n = _q(pot, lam, r) - l2
    if np.any(n <= 0):
        raise QuadratureError("radial velocity vanishes in the outer region")
    i0 = float(np.sum(w * k / (v * np.sqrt(n))))
    i1 = 0.0
    if derivative:
        with np.errstate(over="ignore"):    # n^1.5 = inf far out; the term is then 0
            i1 = float(np.sum(w * k / (v * n**1.5)))
    return i0, i1


def _angle_integrals(pot: RadialPotential, lam: float, r0: float, delta: float,
                     derivative: bool = False) -> tuple[float, float, float]:
    """Integrals of 1/(r sqrt N) and 1/(r N^{3/2}) over [r0, infinity) with L^2 = (1 - delta) Q(r0).

    Returns (I0, I1, Q(r0)).  The inner piece [r0, 2 r0] uses r = r0 (1 + u^2)
    with panels graded towards u = 0, which absorbs the inverse square root of
    the turning point (delta = 0) uniformly as delta -> 0.
    """
    q0 = float(_q(pot, lam, r0))
    l2 = (1.0 - delta) * q0
    u, wu = graded_unit_rule(_INNER_LEVELS, _PANEL_N)
    r = r0 * (1.0 + u * u)
    dq = _dq(pot, lam, r0, r)
    jac = 2.0 * r0 * u
    if delta > 0:
        n_in = r0 * u * u * dq + q0 * delta
        i0 = float(np.sum(wu * jac / (r * np.sqrt(n_in))))
    else:
        # u / sqrt(r0 u^2 dq) written without the removable 0/0
        n_in = r0 * u * u * dq
        i0 = float(np.sum(wu * 2.0 * r0 / (r * np.sqrt(r0 * dq))))
    if np.any(dq <= 0):
        raise QuadratureError("Q is not increasing near the starting radius")
    o0, o1 = _outer_integrals(pot, lam, 2.0 * r0, l2, derivative)
    i1 = 0.0
    if derivative:
        if delta <= 0:
            raise QuadratureError("derivative integral diverges at the turning point")
        i1 = float(np.sum(wu * jac / (r * n_in**1.5))) + o1
    return i0 + o0, i1, q0


def _speed(pot: RadialPotential, lam: float, r) -> np.ndarray:
    return np.sqrt(2.0 * lam - 2.0 * pot._v(r))


def turning_point(pot: RadialPotential, lam: float, L: float) -> float:
    """Unique root r_tp >= 1 of 2 lam - 2 V1(r) - L^2 / r^2.

    Raises NoTurningPointError if the root lies below 1.  For lam = 0 and
    L = 0 there is no turning point either; r_min = 1 is returned.
    """
    if lam < 0:
        raise DomainError("energy must be non-negative")
    l2 = float(L) ** 2
    if l2 == 0.0:
        if lam == 0.0:
            return R_MIN
        raise NoTurningPointError("L = 0 with positive energy has no turning point")

    def h(r):
        return float(_q(pot, lam, r)) - l2

    if h(R_MIN) > 0:
        raise NoTurningPointError("turning point lies below r = 1")
    if h(R_MIN) == 0:
        return R_MIN
    hi = 2.0
    while h(hi) <= 0:
        hi *= 2.0
        if hi > 1e300:
            raise NoTurningPointError("no turning point found (Q bounded by L^2)")
    lo = max(R_MIN, hi / 2.0)
    r = optimize.brentq(h, lo, hi, xtol=1e-15 * hi, rtol=4 * np.finfo(float).eps, maxiter=500)
    for _ in range(3):
        qp = float(_q_prime(pot, lam, r))
        if qp <= 0:
            break
        step = h(r) / qp
        r_new = r - step
        if not (lo <= r_new <= hi) or abs(step) <= 1e-16 * r:
            break
        r = r_new
    return float(r)


def _kappa(pot: RadialPotential, lam: float, r1: float, L: float) -> float:
    return float(L) / (r1 * float(_speed(pot, lam, r1)))


def _theta_of_kappa(pot, lam, r1, kappa, derivative=False):
    """|theta1| and d|theta1|/dkappa for 0 <= kappa <= 1."""
    delta = (1.0 - kappa) * (1.0 + kappa)
    i0, i1, q0 = _angle_integrals(pot, lam, r1, delta, derivative)
    rg = math.sqrt(q0)
    L = kappa * rg
    th = L * i0
    if not derivative:
        return th, None
    return th, rg * (i0 + L * L * i1)


def theta1_of_L(pot: RadialPotential, lam: float, r1: float, L: float,
                kappa0_sq: float = KAPPA0_SQ) -> float:
    """Initial angle theta1 = -L * integral_{r1}^inf r^-2 f^-1/2 dr; odd in L."""
    _check_radius(r1)
    if lam < 0:
        raise DomainError("energy must be non-negative")
    if L == 0:
        return 0.0
    kap = _kappa(pot, lam, r1, L)
    if kap * kap > kappa0_sq:
        raise AdmissibilityError(
            f"normalized momentum kappa^2 = {kap * kap:.6g} exceeds kappa0^2 = {kappa0_sq:.6g}")
    th, _ = _theta_of_kappa(pot, lam, r1, abs(kap))
    return -math.copysign(th, L)


def theta_tp(pot: RadialPotential, lam: float, L: float) -> float:
    """Angle between the turning point and the asymptotic direction (non-negative)."""
    if L == 0:
        return 0.0
    r_tp = turning_point(pot, lam, L)
    i0, _, q0 = _angle_integrals(pot, lam, r_tp, 0.0)
    return math.sqrt(q0) * i0


def allowed_angle(pot: RadialPotential, lam: float, r1: float) -> float:
    """Largest |theta1| of the radial problem at (lam, r1): the limit kappa -> 1."""
    _check_radius(r1)
    return _theta_of_kappa(pot, lam, float(r1), 1.0)[0]


def allowed_angle_floor(pot: RadialPotential, r_max: float = 1e8, n: int = 4000) -> float:
    """Lower bound pi/2 - arctan sqrt(C - 1), C = sup_{r' >= r >= 1} V1(r') / V1(r) on a grid."""
    r = np.geomspace(1.0, r_max, n)
    a = np.abs(pot._v(r))
    tail_max = np.maximum.accumulate(a[::-1])[::-1]
    C = max(1.0, float(np.max(tail_max / a)))
    return math.pi / 2.0 - math.atan(math.sqrt(C - 1.0))


def sigma0(pot: RadialPotential) -> float:
    """Cone opening keeping |theta1| within 90% of the allowed-angle floor."""
    return 1.0 - math.cos(0.9 * allowed_angle_floor(pot))


def L_of_theta1(pot: RadialPotential, lam: float, r1: float, theta1: float,
                kappa0_sq: float = KAPPA0_SQ, tol: float = 1e-13) -> float:
    """Angular momentum with theta1_of_L(L) = theta1; sign(L) = -sign(theta1).

    Bisection on kappa = L / (r1 g(r1)) to a bracket of width 1e-3, then
    Newton with the analytic derivative, safeguarded by the bracket.
    """
    _check_radius(r1)
    if lam < 0:
        raise DomainError("energy must be non-negative")
    r1 = float(r1)
    target = abs(float(theta1))
    if target == 0.0:
        return 0.0
    kmax = math.sqrt(kappa0_sq)
    th_max, _ = _theta_of_kappa(pot, lam, r1, kmax)
    if target > th_max:
        floor = allowed_angle_floor(pot)
        raise AdmissibilityError(
            f"|theta1| = {target:.12g} exceeds the largest admissible angle {th_max:.12g} "
            f"(kappa0^2 = {kappa0_sq:g}); the allowed angle is at least {floor:.12g} "
            "for this potential")
    lo, hi = 0.0, kmax
    while hi - lo > 1e-3:
        mid = 0.5 * (lo + hi)
        if _theta_of_kappa(pot, lam, r1, mid)[0] < target:
            lo = mid
        else:
            hi = mid
    kap = 0.5 * (lo + hi)
    for _ in range(60):
        th, dth = _theta_of_kappa(pot, lam, r1, kap, derivative=True)
        res = th - target
        if res < 0:
            lo = kap
        else:
            hi = kap
        if abs(res) <= tol * max(1.0, target):
            break
        step = res / dth
        new = kap - step
        if not (lo < new < hi):
            new = 0.5 * (lo + hi)
        if abs(new - kap) <= 1e-16:
            kap = new
            break
        kap = new
    else:
        raise NonConvergenceError("shooting on the angular momentum did not converge")
    L = kap * r1 * float(_speed(pot, lam, r1))
    return -math.copysign(L, theta1)


def kappa_sensitivity(pot: RadialPotential, lam: float, r1: float) -> float:
    """Slope of kappa^2 against theta1^2 at theta1 = 0: (int_1^inf s^-2 g(r1)/g(s r1) ds)^-2.

    With s = v^-k, k = 2/(2 - mu), the integrand is bounded at v = 0 for all lam.
    """
    _check_radius(r1)
    k = _outer_exponent(pot)
    g1 = float(_speed(pot, lam, r1))

    def f(v):
        if v == 0.0:
            if lam > 0:
                return 0.0
            v = 1e-300 ** (1.0 / k)
        return k * v ** (k - 1.0) * g1 / float(_speed(pot, lam, r1 * v**-k))

    val, err = integrate.quad(f, 0.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=400)
    if not err <= 1e-10 * abs(val):
        raise QuadratureError(f"sensitivity integral error estimate {err:g} too large")
    return val**-2


# ----------------------------------------------------------------------------
# orbit tables
# ----------------------------------------------------------------------------

class PlanarOrbit:
    """Solution of the radial problem from r1 with angular momentum L.

    Holds quadrature tables of t(r) and theta(r) on panels that grow
    geometrically away from r1, so that r(t), theta(t) and their rates can
    be evaluated anywhere in [1, t_max].  Instances are not modified after
    construction apart from transparent table extension.
    """

    def __init__(self, pot: RadialPotential, lam: float, r1: float, L: float,
                 t_max: float = 1e6, kappa0_sq: float = KAPPA0_SQ):
        _check_radius(r1)
        if lam < 0:
            raise DomainError("energy must be non-negative")
        self.pot = pot
        self.lam = float(lam)
        self.r1 = float(r1)
        self.L = float(L)
        self.kappa = _kappa(pot, lam, r1, L)
        if self.kappa**2 > kappa0_sq:
            raise AdmissibilityError(
                f"kappa^2 = {self.kappa**2:.6g} exceeds kappa0^2 = {kappa0_sq:.6g}")
        self.delta = (1.0 - abs(self.kappa)) * (1.0 + abs(self.kappa))
        self.q1 = float(_q(pot, lam, self.r1))
        self.l2 = self.L**2
        if self.L == 0.0:
            self.r_tp = 0.0
        else:
            try:
                self.r_tp = turning_point(pot, lam, self.L)
            except NoTurningPointError:
                self.r_tp = 0.0
        self.theta1 = theta1_of_L(pot, lam, r1, L, kappa0_sq) if L != 0 else 0.0
        qp = float(_q_prime(pot, lam, self.r1))
        self._d0 = max(self.q1 * self.delta / qp, 1e-14 * self.r1)
        self._edges = np.array([self.r1])
        self._t_edges = np.array([1.0])
        self._extend(float(t_max))

    # -- tables -----------------------------------------------------------
    def _n_of_r(self, r):
        r = np.asarray(r, dtype=float)
        near = r < 2.0 * self.r1
        out = np.empty_like(r)
        if np.any(near):
            rn = r[near]
            out[near] = (rn - self.r1) * _dq(self.pot, self.lam, self.r1, rn) + self.q1 * self.delta
        if np.any(~near):
            out[~near] = _q(self.pot, self.lam, r[~near]) - self.l2
        return out

    def _panel_integrals(self, a, b, which: str):
        x, w = gauss_legendre_unit(_PANEL_N)
        a = np.asarray(a, dtype=float)[..., None]
        b = np.asarray(b, dtype=float)[..., None]
        r = a + (b - a) * x
        n = self._n_of_r(r.ravel()).reshape(r.shape)
        if which == "t":
            f = r / np.sqrt(n)
        else:
            f = 1.0 / (r * np.sqrt(n))
        return np.sum((b - a) * w * f, axis=-1)

    def _extend(self, t_max: float):
        j0 = self._edges.size - 1
        while self._t_edges[-1] < t_max:
            j = np.arange(j0 + 1, j0 + 65)
            new = self.r1 + self._d0 * (2.0 ** (j / _PANELS_PER_OCTAVE) - 1.0)
            if new[-1] > 1e150:
                raise QuadratureError("orbit table exceeded the representable radius range")
            a = np.concatenate(([self._edges[-1]], new[:-1]))
            dt = self._panel_integrals(a, new, "t")
            self._edges = np.concatenate((self._edges, new))
            self._t_edges = np.concatenate((self._t_edges, self._t_edges[-1] + np.cumsum(dt)))
            j0 = self._edges.size - 1
        if self.L != 0.0:
            dth = self._panel_integrals(self._edges[:-1], self._edges[1:], "theta")
            tail, _ = _outer_integrals(self.pot, self.lam, self._edges[-1], self.l2)
            back = np.concatenate((np.cumsum(dth[::-1])[::-1], [0.0])) + tail
            self._theta_edges = -self.L * back
        else:
            self._theta_edges = np.zeros_like(self._edges)
        self.t_max = float(self._t_edges[-1])

    # -- evaluation -------------------------------------------------------
    def radial_speed(self, r):
        """dr/dt = sqrt(f(r)) on the outgoing branch."""
        r = np.asarray(r, dtype=float)
        return np.sqrt(self._n_of_r(np.atleast_1d(r))).reshape(r.shape) / r

    def t_of_r(self, r):
        """Time at which the orbit reaches radius r >= r1 (t(r1) = 1)."""
        r = np.asarray(r, dtype=float)
        if np.any(r < self.r1):
            raise DomainError("time-radius map is defined only for r >= r1")
        rr = np.atleast_1d(r)
        while rr.max() > self._edges[-1]:
            self._extend(2.0 * self.t_max)
        idx = np.clip(np.searchsorted(self._edges, rr, side="right") - 1, 0, self._edges.size - 2)
        out = self._t_edges[idx] + self._panel_integrals(self._edges[idx], rr, "t")
        return out.reshape(r.shape) if r.shape else float(out[0])

    def r_of_t(self, t):
        """Inverse of :meth:`t_of_r` by Hermite initial guess and Newton steps."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 1.0):
            raise DomainError("orbit times start at t = 1")
        tt = np.atleast_1d(t)
        if tt.size and tt.max() > self.t_max:
            self._extend(float(tt.max()) * 1.0001)
        e, te = self._edges, self._t_edges
        idx = np.clip(np.searchsorted(te, tt, side="right") - 1, 0, e.size - 2)
        a, b = e[idx], e[idx + 1]
        ta, tb = te[idx], te[idx + 1]
        h = tb - ta
        s = (tt - ta) / h
        va = self.radial_speed(a) * h
        vb = self.radial_speed(b) * h
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        r = np.clip(h00 * a + h10 * va + h01 * b + h11 * vb, a, b)
        for _ in range(4):
            res = ta + self._panel_integrals(a, r, "t") - tt
            r = np.clip(r - res * self.radial_speed(r), a, b)
        return r.reshape(t.shape) if t.shape else float(r[0])

    def theta_of_r(self, r):
        """Polar angle -L int_r^inf rho^-2 f^-1/2 d rho; tends to 0 as r -> infinity."""
        r = np.asarray(r, dtype=float)
        rr = np.atleast_1d(r)
        if self.L == 0.0:
            return np.zeros(r.shape) if r.shape else 0.0
        while rr.max() > self._edges[-1]:
            self._extend(2.0 * self.t_max)
        idx = np.clip(np.searchsorted(self._edges, rr, side="right") - 1, 0, self._edges.size - 2)
        b = self._edges[idx + 1]
        out = self._theta_edges[idx + 1] - self.L * self._panel_integrals(rr, b, "theta")
        return out.reshape(r.shape) if r.shape else float(out[0])

    def trajectory(self, t_grid) -> Trajectory:
        """Planar trajectory in the frame where the asymptotic direction is (1, 0)."""
        t = np.asarray(t_grid, dtype=float)
        r = np.atleast_1d(self.r_of_t(t))
        th = np.atleast_1d(self.theta_of_r(r))
        rdot = self.radial_speed(r)
        thdot = self.L / r**2
        c, s = np.cos(th), np.sin(th)
        pos = np.stack((r * c, r * s), axis=1)
        vel = np.stack((rdot * c - r * thdot * s, rdot * s + r * thdot * c), axis=1)
        return Trajectory(np.atleast_1d(t), pos, vel, self.lam)


def planar_orbit(pot: RadialPotential, lam: float, r1: float, theta1: float,
                 t_max: float = 1e6, kappa0_sq: float = KAPPA0_SQ) -> PlanarOrbit:
    """Radial-problem solution with prescribed initial angle."""
    L = L_of_theta1(pot, lam, r1, theta1, kappa0_sq)
    return PlanarOrbit(pot, lam, r1, L, t_max, kappa0_sq)


def time_radius_map(pot: RadialPotential, lam: float, L: float, r1: float,
                    t_max: float = 1e6, kappa0_sq: float = KAPPA0_SQ) -> PlanarOrbit:
    """Orbit object exposing t_of_r / r_of_t for the given (lam, L, r1)."""
    return PlanarOrbit(pot, lam, r1, L, t_max, kappa0_sq)


def planar_orbit_trajectory(pot: RadialPotential, lam: float, r1: float, theta1: float,
                            t_grid, kappa0_sq: float = KAPPA0_SQ) -> Trajectory:
    t = np.asarray(t_grid, dtype=float)
    orb = planar_orbit(pot, lam, r1, theta1, float(t.max()), kappa0_sq)
    return orb.trajectory(t)


def apse_orbit(pot: RadialPotential, lam: float, L: float, r_max: float,
               n_per_side: int = 400) -> Trajectory:
    """Complete planar scattering orbit, symmetric about its turning point.

    Time is 0 at the turning point and the outgoing asymptote is (1, 0); the
    incoming half is the mirror image in the apse line at angle -theta_tp.
    Quadrature uses r = r_tp + u^2, which removes the square-root singularity.
    Samples are geometrically spaced in r - r_tp up to r_max.
    """
    if L == 0:
        raise ConfigError("the apse orbit needs nonzero angular momentum")
    r_tp = turning_point(pot, lam, L)
    if not r_max > r_tp:
        raise ConfigError("r_max must exceed the turning radius")
    th_tp = theta_tp(pot, lam, L)
    dr = np.geomspace(1e-10 * r_tp, r_max - r_tp, int(n_per_side))
    u_edges = np.concatenate(([0.0], np.sqrt(dr)))
    x, w = gauss_legendre_unit(16)
    a, b = u_edges[:-1, None], u_edges[1:, None]
    u = a + (b - a) * x
    r = r_tp + u * u
    near = r < 2.0 * r_tp
    n = np.empty_like(r)                # (Q(r) - L^2) / u^2
    n[near] = _dq(pot, lam, r_tp, r[near])
    n[~near] = (_q(pot, lam, r[~near]) - L * L) / (u[~near] ** 2)
    base = 2.0 * (b - a) * w / np.sqrt(n)
    t_out = np.cumsum(np.sum(base * r, axis=1))
    th_out = -th_tp + abs(L) * np.cumsum(np.sum(base / r, axis=1))
    rs = r_tp + dr
    rdot = np.sqrt(np.maximum(_q(pot, lam, rs) - L * L, 0.0)) / rs
    thdot = abs(L) / rs**2
    th_in = -2.0 * th_tp - th_out
    times = np.concatenate((-t_out[::-1], [0.0], t_out))
    r_all = np.concatenate((rs[::-1], [r_tp], rs))
    th_all = np.concatenate((th_in[::-1], [-th_tp], th_out))
    rd_all = np.concatenate((-rdot[::-1], [0.0], rdot))
    thd_all = np.concatenate((thdot[::-1], [abs(L) / r_tp**2], thdot))
    c, s = np.cos(th_all), np.sin(th_all)
    pos = np.stack((r_all * c, r_all * s), axis=1)
    vel = np.stack((rd_all * c - r_all * thd_all * s, rd_all * s + r_all * thd_all * c), axis=1)
    if L < 0:
        pos[:, 1] *= -1.0
        vel[:, 1] *= -1.0
    return Trajectory(times, pos, vel, float(lam))


# ----------------------------------------------------------------------------
# embedding and the mixed problem
# ----------------------------------------------------------------------------

def _plane_basis(x: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """Unit vector e with x/|x| = cos(theta1) omega + sin(theta1) e, theta1 <= 0.

    Returns zeros on the radial branch (x parallel to omega).
    """
    xh = x / np.linalg.norm(x)
    c = xh @ omega
    perp = xh - c * omega
    s = np.linalg.norm(perp)
    if s < 1e-12:
        if c < 0:
            raise ConeError("x points against omega; the embedding is undefined")
        return np.zeros_like(x)
    return -perp / s


def embed(x, omega, planar: Trajectory) -> Trajectory:
    """Map a planar trajectory (asymptotic direction (1, 0)) into the plane spanned by x and omega."""
    x = np.asarray(x, dtype=float)
    w = normalize_direction(omega)
    e = _plane_basis(x, w)
    P = planar.positions
    Vv = planar.velocities
    pos = P[:, :1] * w + P[:, 1:2] * e
    vel = Vv[:, :1] * w + Vv[:, 1:2] * e
    return Trajectory(planar.times, pos, vel, planar.lam)


def radial_field(pot: RadialPotential, x, omega, lam: float,
                 kappa0_sq: float = KAPPA0_SQ) -> np.ndarray:
    """Initial velocity F1(x) of the radial mixed problem, without building orbit tables."""
    data = ScatteringData(x, omega, lam)
    r1 = data.r1
    th1 = data.theta1()
    L = L_of_theta1(pot, data.lam, r1, th1, kappa0_sq)
    g1 = float(_speed(pot, data.lam, r1))
    kap = L / (r1 * g1)
    rdot = g1 * math.sqrt((1.0 - kap) * (1.0 + kap))
    xh = data.x / r1
    e = _plane_basis(data.x, data.omega)
    e_theta = -math.sin(th1) * data.omega + math.cos(th1) * e
    return rdot * xh + (L / r1) * e_theta


def solve_mixed_radial(pot: RadialPotential, data: ScatteringData, t_grid=None,
                       sigma: float | None = None, kappa0_sq: float = KAPPA0_SQ):
    """Solve the radial mixed problem for (x, omega, lam).

    Returns the planar orbit, the embedded trajectory on ``t_grid`` (default
    200 log-spaced times in [1, 1e4]) and F1(x), the velocity at t = 1.
    """
    sig = sigma0(pot) if sigma is None else float(sigma)
    if not data.in_cone(R_MIN, sig):
        raise ConeError(f"x is outside the outgoing cone with sigma = {sig:.6g}")
    t = np.geomspace(1.0, 1e4, 200) if t_grid is None else np.asarray(t_grid, dtype=float)
    orb = planar_orbit(pot, data.lam, data.r1, data.theta1(), float(t.max()), kappa0_sq)
    traj = embed(data.x, data.omega, orb.trajectory(t))
    pl = orb.trajectory(np.array([1.0]))
    F1 = embed(data.x, data.omega, pl).velocities[0]
    return orb, traj, F1
