"""Potential models, derived radial quantities and audits of the standing conditions.

Units are dimensionless with hbar = m = 1.  The radial part V1 is only ever
evaluated for r >= 1; public entry points reject smaller radii.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy import integrate

from .errors import ConfigError, DomainError, QuadratureError

R_MIN = 1.0

ArrayFunc = Callable[[np.ndarray], np.ndarray]


def _check_radius(r, what: str = "radius") -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.size and (not np.all(np.isfinite(r)) or np.min(r) < R_MIN):
        raise DomainError(f"{what} must be finite and >= {R_MIN}, got min {np.min(r)!r}")
    return r


# ----------------------------------------------------------------------------
# smooth cutoffs
# ----------------------------------------------------------------------------

def smooth_step_gt(s, eps: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Smooth increasing step, 0 below eps/2 and 1 above 3 eps/4.

    Returns the value and its first two derivatives with respect to ``s``.
    The transition is the quintic smoothstep 6u^5 - 15u^4 + 10u^3, which is C^2.
    """
    s = np.asarray(s, dtype=float)
    a, b = 0.5 * eps, 0.75 * eps
    u = np.clip((s - a) / (b - a), 0.0, 1.0)
    inside = (u > 0.0) & (u < 1.0)
    val = u**3 * (10.0 - 15.0 * u + 6.0 * u**2)
    d1 = np.where(inside, 30.0 * u**2 * (1.0 - u) ** 2, 0.0) / (b - a)
    d2 = np.where(inside, 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u), 0.0) / (b - a) ** 2
    return val, d1, d2


def smooth_step_lt(s, eps: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Complement of :func:`smooth_step_gt`: 1 below eps/2, 0 above 3 eps/4."""
    val, d1, d2 = smooth_step_gt(s, eps)
    return 1.0 - val, -d1, -d2


# ----------------------------------------------------------------------------
# radial part
# ----------------------------------------------------------------------------

def _fd_derivatives(v1: ArrayFunc) -> tuple[ArrayFunc, ArrayFunc, ArrayFunc]:
    eps = np.finfo(float).eps

    def d1(r):
        r = np.asarray(r, dtype=float)
        h = r * eps ** (1.0 / 3.0)
        return (v1(r + h) - v1(r - h)) / (2.0 * h)

    def d2(r):
        r = np.asarray(r, dtype=float)
        h = r * eps ** 0.25
        return (v1(r + h) - 2.0 * v1(r) + v1(r - h)) / h**2

    def d3(r):
        r = np.asarray(r, dtype=float)
        h = r * eps ** 0.2
        return (v1(r + 2 * h) - 2.0 * v1(r + h) + 2.0 * v1(r - h) - v1(r - 2 * h)) / (2.0 * h**3)

    return d1, d2, d3


@dataclass(frozen=True, eq=False)
class RadialPotential:
    """Negative radial potential V1(r) on r >= 1 with its first three derivatives.

    Attributes
    ----------
    v1 : callable
        Vectorised map r -> V1(r).
    derivatives : tuple of callables
        Maps for V1', V1'' and V1'''.
    mu : float
        Decay exponent in (0, 2).
    eps1 : float
        Constant with V1(r) <= -eps1 r^-mu.
    eps1_tilde : float
        Virial constant with r V1'(r) <= -(2 - eps1_tilde) V1(r).
    """

    v1: ArrayFunc
    derivatives: tuple[ArrayFunc, ArrayFunc, ArrayFunc]
    mu: float
    eps1: float
    eps1_tilde: float
    name: str = "custom"
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not (0.0 < self.mu < 2.0):
            # kept constructible so that audits can report the violation
            pass
        if self.eps1 <= 0 or self.eps1_tilde <= 0:
            raise ConfigError("eps1 and eps1_tilde must be positive")

    @property
    def alpha(self) -> float:
        return 2.0 / (2.0 + self.mu)

    def value(self, r):
        return self.v1(_check_radius(r))

    def deriv(self, r, n: int = 1):
        if n == 0:
            return self.value(r)
        if n not in (1, 2, 3):
            raise ValueError("only derivatives of order 1..3 are available")
        return self.derivatives[n - 1](_check_radius(r))

    # unchecked fast paths used internally once radii are known to be valid
    def _v(self, r):
        return self.v1(r)

    def _d(self, r, n: int):
        return self.derivatives[n - 1](r)

    def to_config(self) -> dict:
        return {"model": self.name, **dict(self.params)}


def power_law(gamma: float, mu: float, eps1: float | None = None,
              eps1_tilde: float | None = None) -> RadialPotential:
    """V1(r) = -gamma r^-mu.

    The default constants sit halfway inside the sharp values eps1 = gamma and
    eps1_tilde = 2 - mu so that audits report strictly positive slack.
    """
    if gamma <= 0:
        raise ConfigError("gamma must be positive")
    g, m = float(gamma), float(mu)
    if eps1 is None:
        eps1 = 0.5 * g
    if eps1_tilde is None:
        eps1_tilde = 0.5 * (2.0 - m) if m < 2.0 else 1e-3

    def v(r):
        return -g * np.power(r, -m)

    def d1(r):
        return g * m * np.power(r, -m - 1.0)

    def d2(r):
        return -g * m * (m + 1.0) * np.power(r, -m - 2.0)

    def d3(r):
        return g * m * (m + 1.0) * (m + 2.0) * np.power(r, -m - 3.0)

    name = "coulomb" if m == 1.0 else "power_law"
    params = {"gamma": g} if name == "coulomb" else {"gamma": g, "mu": m}
    return RadialPotential(v, (d1, d2, d3), m, eps1, eps1_tilde, name, params)


def coulomb(gamma: float = 1.0) -> RadialPotential:
    """Attractive Coulomb potential V1(r) = -gamma / r."""
    return power_law(gamma, 1.0)


def power_law_short_range(gamma: float, mu: float, beta: float, nu: float) -> RadialPotential:
    """V1(r) = -gamma r^-mu - beta r^-nu with nu > mu and beta >= 0."""
    if gamma <= 0 or beta < 0 or not nu > mu:
        raise ConfigError("need gamma > 0, beta >= 0 and nu > mu")
    g, m, b, n = map(float, (gamma, mu, beta, nu))
    virial = 2.0 - (g * m + b * n) / (g + b)
    if virial <= 0:
        raise ConfigError("short-range part violates the virial condition at r = 1")

    def v(r):
        return -g * np.power(r, -m) - b * np.power(r, -n)

    def d1(r):
        return g * m * np.power(r, -m - 1.0) + b * n * np.power(r, -n - 1.0)

    def d2(r):
        return -g * m * (m + 1) * np.power(r, -m - 2.0) - b * n * (n + 1) * np.power(r, -n - 2.0)

    def d3(r):
        return (g * m * (m + 1) * (m + 2) * np.power(r, -m - 3.0)
                + b * n * (n + 1) * (n + 2) * np.power(r, -n - 3.0))

    return RadialPotential(v, (d1, d2, d3), m, 0.5 * g, 0.5 * virial, "power_law_short_range",
                           {"gamma": g, "mu": m, "beta": b, "nu": n})


def from_callable(v1: ArrayFunc, mu: float, eps1: float, eps1_tilde: float,
                  d1: ArrayFunc | None = None, d2: ArrayFunc | None = None,
                  d3: ArrayFunc | None = None, name: str = "custom") -> RadialPotential:
    """Wrap a user function; missing derivatives fall back to central differences."""
    fd = _fd_derivatives(v1)
    ders = (d1 or fd[0], d2 or fd[1], d3 or fd[2])
    return RadialPotential(v1, ders, float(mu), float(eps1), float(eps1_tilde), name, {})


# ----------------------------------------------------------------------------
# non-radial part
# ----------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Perturbation:
    """Short-range correction V2(x) with gradient and Hessian.

    ``eps2`` is the extra decay exponent; ``math.inf`` marks V2 = 0.
    Callables take arrays of shape (..., d).
    """

    v2: ArrayFunc
    grad_v2: ArrayFunc
    hess_v2: ArrayFunc
    eps2: float
    dim: int | None = None
    truncation_radius: float | None = None
    name: str = "custom"
    params: Mapping[str, object] = field(default_factory=dict)

    @property
    def is_zero(self) -> bool:
        return self.name == "zero"

    def effective_eps2(self, mu: float) -> float:
        """Decay exponent capped at (2 - mu)/4; a faster decay satisfies the smaller value."""
        return min(self.eps2, 0.25 * (2.0 - mu))

    def truncated(self, n: float) -> "Perturbation":
        """The cut-off perturbation F(|x|/n < 1) V2 (support in |x| <= 3n/4)."""
        if n <= 0:
            raise ConfigError("truncation radius must be positive")
        if self.is_zero:
            return self
        base = self

        def cut(x):
            x = np.asarray(x, dtype=float)
            r = np.linalg.norm(x, axis=-1)
            c, c1, c2 = smooth_step_lt(r / n, 1.0)
            return r, c, c1 / n, c2 / n**2

        def v(x):
            _, c, _, _ = cut(x)
            return c * base.v2(x)

        def grad(x):
            x = np.asarray(x, dtype=float)
            r, c, c1, _ = cut(x)
            rs = np.where(r > 0, r, 1.0)
            xhat = x / rs[..., None]
            return c[..., None] * base.grad_v2(x) + (c1 * base.v2(x))[..., None] * xhat

        def hess(x):
            x = np.asarray(x, dtype=float)
            r, c, c1, c2 = cut(x)
            rs = np.where(r > 0, r, 1.0)
            xhat = x / rs[..., None]
            d = x.shape[-1]
            eye = np.eye(d)
            pp = xhat[..., :, None] * xhat[..., None, :]
            dxhat = (eye - pp) / rs[..., None, None]
            gv = base.grad_v2(x)
            vv = base.v2(x)
            out = c[..., None, None] * base.hess_v2(x)
            out = out + c1[..., None, None] * (gv[..., :, None] * xhat[..., None, :]
                                               + xhat[..., :, None] * gv[..., None, :])
            out = out + (c2 * vv)[..., None, None] * pp + (c1 * vv)[..., None, None] * dxhat
            return out

        return Perturbation(v, grad, hess, self.eps2, self.dim, float(n), self.name,
                            dict(self.params))

    def to_config(self) -> dict:
        return {"model": self.name, **dict(self.params)}


def zero_perturbation(dim: int | None = None) -> Perturbation:
    """V2 = 0."""

    def v(x):
        return np.zeros(np.shape(x)[:-1])

    def grad(x):
        return np.zeros(np.shape(x))

    def hess(x):
        s = np.shape(x)
        return np.zeros(s + (s[-1],))

    return Perturbation(v, grad, hess, math.inf, dim, None, "zero", {})


def anisotropic_power(strength: float, eps2: float, mu: float,
                      direction=(1.0, 0.0)) -> Perturbation:
    """Dipole-type perturbation V2(x) = strength (e.x) <x>^-(mu + eps2 + 1).

    It is homogeneous of degree -(mu + eps2) at infinity, so every derivative of
    order k decays like |x|^-(mu + eps2 + k).
    """
    if eps2 <= 0:
        raise ConfigError("eps2 must be positive")
    e = np.asarray(direction, dtype=float)
    if e.ndim != 1 or e.size < 2 or not np.linalg.norm(e) > 0:
        raise ConfigError("direction must be a nonzero vector of dimension >= 2")
    e = e / np.linalg.norm(e)
    s = float(strength)
    p = float(mu) + float(eps2) + 1.0

    def v(x):
        x = np.asarray(x, dtype=float)
        w = 1.0 + np.sum(x * x, axis=-1)
        return s * (x @ e) * w ** (-0.5 * p)

    def grad(x):
        x = np.asarray(x, dtype=float)
        w = 1.0 + np.sum(x * x, axis=-1)
        ex = x @ e
        a = w ** (-0.5 * p)
        b = -p * ex * w ** (-0.5 * p - 1.0)
        return s * (a[..., None] * e + b[..., None] * x)

    def hess(x):
        x = np.asarray(x, dtype=float)
        d = x.shape[-1]
        w = 1.0 + np.sum(x * x, axis=-1)
        ex = x @ e
        c1 = -p * w ** (-0.5 * p - 1.0)
        c2 = p * (p + 2.0) * ex * w ** (-0.5 * p - 2.0)
        ext = e[None, :] if x.ndim > 1 else e
        sym = x[..., :, None] * ext[..., None, :] if x.ndim > 1 else np.outer(x, e)
        sym = sym + np.swapaxes(sym, -1, -2)
        out = c1[..., None, None] * sym
        out = out + (c1 * ex)[..., None, None] * np.eye(d)
        out = out + c2[..., None, None] * (x[..., :, None] * x[..., None, :])
        return s * out

    params = {"strength": s, "eps2": float(eps2), "mu": float(mu), "direction": e.tolist()}
    return Perturbation(v, grad, hess, float(eps2), e.size, None, "anisotropic_power", params)


# ----------------------------------------------------------------------------
# total potential
# ----------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TotalPotential:
    """V = V1(|x|) + V2(x) as a function on R^d (|x| >= 1)."""

    radial: RadialPotential
    perturbation: Perturbation

    def value(self, x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        return self.radial._v(r) + self.perturbation.v2(x)

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        return (self.radial._d(r, 1) / r)[..., None] * x + self.perturbation.grad_v2(x)

    def hess(self, x):
        return hessian_v1(self.radial, x) + self.perturbation.hess_v2(np.asarray(x, dtype=float))


# ----------------------------------------------------------------------------
# derived quantities
# ----------------------------------------------------------------------------

def g(pot: RadialPotential, lam: float, r):
    """Local speed sqrt(2 lambda - 2 V1(r))."""
    if lam < 0:
        raise DomainError("energy must be non-negative")
    return np.sqrt(2.0 * lam - 2.0 * pot.value(r))


def _t_tilde_scalar(pot: RadialPotential, r: float) -> float:
    if r == 1.0:
        return 0.0

    def integrand(u):
        rho = math.exp(u)
        return rho / math.sqrt(-2.0 * float(pot._v(rho)))

    val, err = integrate.quad(integrand, 0.0, math.log(r), epsabs=0.0, epsrel=1e-13, limit=400)
    if not err <= 1e-10 * abs(val) + 1e-300:
        raise QuadratureError(f"t_tilde quadrature error estimate {err:g} too large")
    return val


def t_tilde(pot: RadialPotential, r):
    """Arrival time at radius r of the zero-energy radial orbit leaving r = 1 at t = 0."""
    r = _check_radius(r)
    out = np.array([_t_tilde_scalar(pot, float(ri)) for ri in np.ravel(r)])
    return out.reshape(r.shape) if r.shape else float(out[0])


def hessian_v1(pot: RadialPotential, y):
    """Hessian of x -> V1(|x|): V1'' P_par + V1'/|y| P_perp. Accepts (d,) or (n, d)."""
    y = np.asarray(y, dtype=float)
    r = np.linalg.norm(y, axis=-1)
    _check_radius(r, "|y|")
    d = y.shape[-1]
    yhat = y / r[..., None]
    ppar = yhat[..., :, None] * yhat[..., None, :]
    a = pot._d(r, 2)
    b = pot._d(r, 1) / r
    return (a - b)[..., None, None] * ppar + b[..., None, None] * np.eye(d)


def third_derivative_contraction(pot: RadialPotential, y, z):
    """Vector D^3 V1(y){z, z}, i.e. sum_jk d_ijk V1(|y|) z_j z_k, elementwise over leading axes."""
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    r = np.sqrt(np.einsum("...i,...i->...", y, y))
    u = y / r[..., None]
    v1p = pot._d(r, 1)
    v2p = pot._d(r, 2)
    v3p = pot._d(r, 3)
    a = np.einsum("...i,...i->...", u, z)
    zz = np.einsum("...i,...i->...", z, z)
    bp = v2p / r - v1p / r**2
    c_u = (v3p - bp) * a**2 + (v2p - v1p / r) / r * (zz - 2.0 * a**2)
    c_z = ((v2p - v1p / r) / r + bp) * a
    return c_u[..., None] * u + c_z[..., None] * z


# ----------------------------------------------------------------------------
# condition audit
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class ConditionReport:
    """Finite-grid audit of the standing conditions.

    ``margins`` maps a condition label to signed slack (positive = satisfied).
    ``limsup`` holds tail estimates (max over the last decade of the grid) of
    r^-1 V1' t~^2 ("radial_force"), V1'' t~^2 ("curvature") and -V1'/sqrt(-2 V1) t~ ("speed_ratio").
    ``raw_margins`` compares the first two with 1/4 (i.e. eps_bar = 0).
    """

    grid: np.ndarray
    margins: dict
    raw_margins: dict
    limsup: dict
    eps_bar_interval: tuple[float, float] | None
    eps_bar: float | None

    # inequalities that may hold with equality
    _non_strict = ("negativity", "virial", "perturbation_rate")

    @property
    def ok(self) -> bool:
        return all(v >= 0 if k in self._non_strict else v > 0 for k, v in self.margins.items())

    def to_dict(self) -> dict:
        return {
            "grid_min": float(self.grid[0]), "grid_max": float(self.grid[-1]),
            "n_samples": int(self.grid.size),
            "margins": {k: float(v) for k, v in self.margins.items()},
            "raw_margins": {k: float(v) for k, v in self.raw_margins.items()},
            "limsup": {k: float(v) for k, v in self.limsup.items()},
            "eps_bar_interval": None if self.eps_bar_interval is None else list(self.eps_bar_interval),
            "eps_bar": self.eps_bar, "ok": self.ok,
        }


def _growth_margin(r: np.ndarray, a: np.ndarray) -> float:
    """log 2 minus the log growth of sup a over the last decade relative to the previous one."""
    last = r >= r[-1] / 10.0
    prev = (r >= r[-1] / 100.0) & ~last
    top = np.max(a[last])
    base = np.max(a[prev]) if np.any(prev) else np.max(a[~last])
    if top == 0.0:
        return math.log(2.0)
    if base == 0.0:
        return -math.inf
    return math.log(2.0) - math.log(top / base)


def _t_tilde_grid(pot: RadialPotential, r: np.ndarray) -> np.ndarray:
    """t~ on an increasing grid by panelwise Gauss quadrature in log r."""
    from ._quad import gauss_legendre_unit

    x, w = gauss_legendre_unit(16)
    lr = np.log(r)
    a = lr[:-1, None]
    h = np.diff(lr)[:, None]
    u = a + h * x
    rho = np.exp(u)
    vals = np.sum(h * w * rho / np.sqrt(-2.0 * pot._v(rho)), axis=1)
    out = np.concatenate(([0.0], np.cumsum(vals)))
    if r[0] > 1.0:
        out += _t_tilde_scalar(pot, float(r[0]))
    return out


def check_conditions(pot: RadialPotential, pert: Perturbation | None = None,
                     r_max: float = 1e6, n_samples: int = 2000,
                     eps_bar: float | None = None) -> ConditionReport:
    """Audit the negativity, decay, virial and limsup conditions on a log grid of [1, r_max].

    Limsup values are the maximum over the last decade of the grid; the default
    eps_bar is the midpoint of the feasible interval.
    """
    if r_max < 10 or n_samples < 100:
        raise ConfigError("need r_max >= 10 and n_samples >= 100")
    mu = pot.mu
    r = np.geomspace(1.0, float(r_max), int(n_samples))
    v = pot._v(r)
    d1, d2, d3 = (pot._d(r, n) for n in (1, 2, 3))
    margins: dict[str, float] = {}
    margins["mu_range"] = min(mu, 2.0 - mu)
    with np.errstate(all="ignore"):
        margins["negativity"] = float(np.min(-v * r**mu) - pot.eps1)
        margins["derivative_decay"] = min(
            _growth_margin(r, np.abs(dn) * r ** (mu + n)) for n, dn in enumerate((v, d1, d2, d3)))
        margins["virial"] = float(np.min((-(2.0 - pot.eps1_tilde) * v - r * d1) * r**mu))

    if pert is not None and not pert.is_zero:
        dim = pert.dim or 2
        dirs = [np.eye(dim)[i] * sgn for i in range(dim) for sgn in (1.0, -1.0)]
        diag = np.ones(dim) / math.sqrt(dim)
        dirs += [diag, -diag]
        worst = math.inf
        for e in dirs:
            x = r[:, None] * e[None, :]
            jb = np.sqrt(1.0 + r**2)
            p = mu + pert.eps2
            parts = (np.abs(pert.v2(x)) * jb**p,
                     np.linalg.norm(pert.grad_v2(x), axis=-1) * jb ** (p + 1),
                     np.linalg.norm(pert.hess_v2(x), axis=(-2, -1)) * jb ** (p + 2))
            worst = min(worst, *(_growth_margin(r, a) for a in parts))
        margins["perturbation_decay"] = worst
    eps2 = 0.25 * (2.0 - mu) if pert is None else pert.effective_eps2(mu)
    if pert is not None and math.isfinite(pert.eps2):
        margins["perturbation_rate"] = 0.25 * (2.0 - mu) - pert.eps2
        eps2 = pert.eps2

    tt = _t_tilde_grid(pot, r)
    last = r >= r[-1] / 10.0
    with np.errstate(all="ignore"):
        e23 = float(np.max((d1 / r * tt**2)[last]))
        e24 = float(np.max((d2 * tt**2)[last]))
        e26 = float(np.max((-d1 / np.sqrt(-2.0 * v) * tt)[last]))
    limsup = {"radial_force": e23, "curvature": e24, "speed_ratio": e26}

    alpha = pot.alpha
    lo = max(0.0, 1.0 - alpha * (mu + 2.0 * eps2), 2.0 * e26 - 1.0)
    top = max(e23, e24)
    hi = math.sqrt(1.0 - 4.0 * top) if top < 0.25 else -math.inf
    interval = (lo, hi) if hi > lo else None
    if eps_bar is None:
        eps_bar_used = 0.5 * (lo + hi) if interval is not None else lo
        chosen = eps_bar_used if interval is not None else None
    else:
        eps_bar_used = chosen = float(eps_bar)
    ceiling = 0.25 * (1.0 - eps_bar_used**2)
    margins["radial_force_ceiling"] = ceiling - e23
    margins["curvature_ceiling"] = ceiling - e24
    margins["eps_bar_lower_bound"] = eps_bar_used - max(0.0, 1.0 - alpha * (mu + 2.0 * eps2))
    margins["speed_ratio_bound"] = 0.5 * (1.0 + eps_bar_used) - e26
    raw = {"radial_force": 0.25 - e23, "curvature": 0.25 - e24, "speed_ratio": 0.5 - e26}
    return ConditionReport(r, margins, raw, limsup, interval, chosen)
