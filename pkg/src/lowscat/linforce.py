"""Decaying solutions of the linear force problem z'' - q(t) z = f(t), z(1) = 0.

The problem is solved on a grid uniform in tau = ln t.  Writing
z = e^{tau/2} w turns it into

    w_tau_tau = (I/4 + t^2 q) w + t^{3/2} f,

whose coefficient tends to a positive definite constant when t^2 q is
bounded below by -(1 - eps^2)/4 (Hardy-type condition).  The second-order
system is discretised with the Numerov scheme, closed at the last node by
the decaying (Robin) condition of the frozen-coefficient problem, and solved
by the block-tridiagonal kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .errors import ConfigError, HardyViolationError, NonConvergenceError

T_MAX = 1e6
N_NODES = 4000


def log_grid(t_max: float = T_MAX, n: int = N_NODES) -> np.ndarray:
    """Times e^{tau_j}, tau uniform on [0, ln t_max], n intervals (n + 1 nodes)."""
    if t_max <= 1.0 or n < 8:
        raise ConfigError("need t_max > 1 and at least 8 intervals")
    return np.exp(np.linspace(0.0, math.log(t_max), n + 1))


def _tau_step(grid: np.ndarray) -> float:
    tau = np.log(grid)
    h = (tau[-1] - tau[0]) / (tau.size - 1)
    if abs(tau[0]) > 1e-14 or np.max(np.abs(np.diff(tau) - h)) > 1e-9 * max(h, 1.0):
        raise ConfigError("grid must start at t = 1 and be uniform in ln t")
    return h


@dataclass(frozen=True, eq=False)
class WeightedGridFunction:
    """Vector-valued function on a log-uniform time grid with weight exponent s.

    ``derivative`` optionally carries dz/dt on the same nodes.
    """

    grid: np.ndarray
    values: np.ndarray
    s: float = 0.0
    derivative: np.ndarray | None = None

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if grid.ndim != 1 or grid.size != vals.shape[0] or abs(grid[0] - 1.0) > 1e-14:
            raise ConfigError("grid must be one-dimensional, start at 1 and match the values")
        if np.any(np.diff(grid) <= 0):
            raise ConfigError("grid must be strictly increasing")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def norm(self, s: float | None = None) -> float:
        """Weighted norm (int |z|^2 t^{-2s} dt)^{1/2} by the trapezoid rule in ln t."""
        return weighted_norm(self.grid, self.values, self.s if s is None else s)

    def with_values(self, values, derivative=None) -> "WeightedGridFunction":
        return WeightedGridFunction(self.grid, values, self.s, derivative)


def weighted_norm(grid: np.ndarray, values: np.ndarray, s: float) -> float:
    vals = np.asarray(values, dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    tau = np.log(grid)
    dens = np.sum(vals * vals, axis=1) * grid ** (1.0 - 2.0 * s)
    return math.sqrt(max(float(np.trapezoid(dens, tau)), 0.0))


@dataclass(frozen=True, eq=False)
class CoefficientPath:
    """Symmetric matrix coefficient q(t) with Hardy constant epsilon_bar.

    ``q`` maps an array of times (n,) to matrices (n, d, d).
    """

    q: Callable[[np.ndarray], np.ndarray]
    epsilon_bar: float
    dim: int

    @classmethod
    def constant_zero(cls, dim: int, epsilon_bar: float = 1.0) -> "CoefficientPath":
        return cls(lambda t: np.zeros(np.shape(t) + (dim, dim)), epsilon_bar, dim)

    @classmethod
    def from_samples(cls, grid, q_values, epsilon_bar: float) -> "CoefficientPath":
        """Coefficient known on grid nodes only (evaluation off the grid interpolates in ln t)."""
        grid = np.asarray(grid, dtype=float)
        qv = np.asarray(q_values, dtype=float)
        tau = np.log(grid)
        d = qv.shape[-1]

        def q(t):
            t = np.asarray(t, dtype=float)
            if t.shape == grid.shape and np.array_equal(t, grid):
                return qv
            lt = np.log(t)
            flat = qv.reshape(qv.shape[0], -1)
            out = np.stack([np.interp(lt, tau, flat[:, i]) for i in range(flat.shape[1])], axis=-1)
            return out.reshape(t.shape + (d, d))

        return cls(q, float(epsilon_bar), d)


def hardy_margin(qpath: CoefficientPath, grid) -> float:
    """inf_t (t - 1)^2 lambda_min(q(t)) + (1 - epsilon_bar^2)/4 over the grid."""
    grid = np.asarray(grid, dtype=float)
    lam_min = np.linalg.eigvalsh(qpath.q(grid))[:, 0]
    return float(np.min((grid - 1.0) ** 2 * lam_min)) + 0.25 * (1.0 - qpath.epsilon_bar**2)


def hardy_infimum(qpath: CoefficientPath, grid) -> float:
    """inf_t (t - 1)^2 lambda_min(q(t)) over the grid."""
    grid = np.asarray(grid, dtype=float)
    lam_min = np.linalg.eigvalsh(qpath.q(grid))[:, 0]
    return float(np.min((grid - 1.0) ** 2 * lam_min))


def _sym_sqrt(a: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(a)
    if w[0] <= 0:
        raise HardyViolationError(
            "far-field coefficient I/4 + t^2 q is not positive definite at t_max")
    return (v * np.sqrt(w)) @ v.T


@dataclass
class LinearSolveInfo:
    """Diagnostics of one decaying solve."""

    scheme_residual: float
    rhs_scale: float
    tail_rate: float
    backend: str = field(default_factory=lambda: kernels.BACKEND)


class DecayingSolver:
    """Factor-once solver for a fixed coefficient path and grid.

    The Numerov matrix depends only on q and the grid, so repeated solves
    with different right-hand sides (Picard iteration) reuse the assembled
    blocks; the block elimination itself is redone per call by the kernel.
    """

    def __init__(self, qpath: CoefficientPath, grid, check_hardy: bool = True):
        grid = np.asarray(grid, dtype=float)
        self.grid = grid
        self.h = _tau_step(grid)
        self.qpath = qpath
        d = qpath.dim
        self.d = d
        qv = np.asarray(qpath.q(grid), dtype=float)
        if qv.shape != (grid.size, d, d):
            raise ConfigError("coefficient path returned matrices of the wrong shape")
        if check_hardy:
            margin = hardy_margin(qpath, grid)
            if margin < 0:
                raise HardyViolationError(f"Hardy margin {margin:.3e} is negative")
        eye = np.eye(d)
        A = 0.25 * eye + (grid**2)[:, None, None] * qv
        self.A = A
        h2 = self.h**2
        side = eye - h2 / 12.0 * A
        mid = -(2.0 * eye + 10.0 * h2 / 12.0 * A)
        n = grid.size - 1  # unknowns w_1 .. w_n
        lower = np.ascontiguousarray(side[0:n])
        upper = np.ascontiguousarray(np.concatenate((side[2:], side[-1:])))
        diag = np.ascontiguousarray(mid[1:n + 1])
        # closure at the last node: ghost value from the decaying Robin condition
        A_n = A[-1]
        self._sqrt_An = _sym_sqrt(A_n)
        M = 2.0 * self.h * eye + self.h**3 / 3.0 * A_n
        side_ghost = side[-1]  # frozen coefficient beyond t_max
        self._ghost = (side_ghost, M)
        diag = diag.copy()
        lower = lower.copy()
        diag[-1] = mid[-1] - side_ghost @ M @ self._sqrt_An
        lower[-1] = side[-2] + side_ghost
        self.lower, self.diag, self.upper = lower, diag, upper
        self.side = side
        self.mid = mid
        self._sqrt_t = np.sqrt(grid)[:, None, None]
        self._t15 = (grid**1.5)[:, None, None]

    def solve_values(self, f: np.ndarray, derivative: bool = True, residual: bool = True):
        """Solve for right-hand side samples f of shape (n+1, d) or (n+1, d, m).

        Returns (z, dz/dt, info) with the same trailing shape.  With
        ``derivative=False`` dz/dt is None; with ``residual=False`` the scheme
        residual in ``info`` is not computed (reported as nan).
        """
        f = np.asarray(f, dtype=float)
        single = f.ndim == 2
        if single:
            f = f[:, :, None]
        t, h = self.grid, self.h
        b = self._t15 * f
        h2 = h * h
        rhs = h2 / 12.0 * (b[:-2] + 10.0 * b[1:-1] + b[2:])
        # tail decay rate of b in tau, used for the inhomogeneous Robin term
        bn = np.linalg.norm(b[-1], axis=0)
        bp = np.linalg.norm(b[-2], axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            kappa = np.where((bn > 0) & (bp > 0), np.log(bp / np.where(bn > 0, bn, 1.0)) / h, 0.0)
        kappa = np.maximum(kappa, 0.0)
        side_g, M = self._ghost
        S = self._sqrt_An
        eye = np.eye(self.d)
        last = np.empty_like(b[-1])
        b_ghost = b[-1] * np.exp(-kappa * h)
        for c in range(b.shape[2]):
            tail = np.linalg.solve(S + kappa[c] * eye, b[-1][:, c])
            ghost_const = -M @ tail - (h**3 / 3.0) * kappa[c] * b[-1][:, c]
            last[:, c] = (h2 / 12.0 * (b_ghost[:, c] + 10.0 * b[-1][:, c] + b[-2][:, c])
                          - side_g @ ghost_const)
        full_rhs = np.concatenate((rhs, last[None]), axis=0)
        w_inner = kernels.block_thomas(self.lower, self.diag, self.upper,
                                       np.ascontiguousarray(full_rhs))
        w = np.concatenate((np.zeros((1,) + w_inner.shape[1:]), w_inner), axis=0)
        res_max = math.nan
        if residual:
            # discrete residual of the Numerov rows (interior)
            res = (np.einsum("nij,njk->nik", self.side[:-2], w[:-2])
                   + np.einsum("nij,njk->nik", self.mid[1:-1], w[1:-1])
                   + np.einsum("nij,njk->nik", self.side[2:], w[2:]) - rhs)
            res_max = float(np.max(np.abs(res))) if res.size else 0.0
        scale = float(np.max(np.abs(rhs))) if rhs.size else 0.0
        info = LinearSolveInfo(res_max, scale, float(np.max(kappa)) if kappa.size else 0.0)
        sq = self._sqrt_t
        z = sq * w
        zdot = None
        if derivative:
            wt = _tau_derivative(w, h)
            zdot = (wt + 0.5 * w) / sq
        if single:
            return z[:, :, 0], None if zdot is None else zdot[:, :, 0], info
        return z, zdot, info


def _tau_derivative(w: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order finite differences along axis 0 (one-sided near the ends)."""
    d = np.empty_like(w)
    d[2:-2] = (w[:-4] - 8.0 * w[1:-3] + 8.0 * w[3:-1] - w[4:]) / (12.0 * h)
    d[0] = (-25 * w[0] + 48 * w[1] - 36 * w[2] + 16 * w[3] - 3 * w[4]) / (12.0 * h)
    d[1] = (-3 * w[0] - 10 * w[1] + 18 * w[2] - 6 * w[3] + w[4]) / (12.0 * h)
    d[-1] = (25 * w[-1] - 48 * w[-2] + 36 * w[-3] - 16 * w[-4] + 3 * w[-5]) / (12.0 * h)
    d[-2] = (3 * w[-1] + 10 * w[-2] - 18 * w[-3] + 6 * w[-4] - w[-5]) / (12.0 * h)
    return d


def solve_decaying(qpath: CoefficientPath, rhs: WeightedGridFunction, s: float | None = None,
                   check_hardy: bool = True) -> WeightedGridFunction:
    """Decaying solution of z'' - q z = rhs with z(1) = 0 on the grid of ``rhs``.

    ``s`` is the weight exponent attached to the result (default: that of rhs).
    The returned function carries dz/dt in ``derivative``.
    """
    if s is not None and s >= 1.0 + 0.5 * qpath.epsilon_bar:
        raise ConfigError("weight exponent must satisfy s < 1 + epsilon_bar/2")
    solver = DecayingSolver(qpath, rhs.grid, check_hardy)
    z, zdot, _ = solver.solve_values(rhs.values)
    return WeightedGridFunction(rhs.grid, z, rhs.s if s is None else s, zdot)


def shifted_path(qpath: CoefficientPath, zeta: float) -> CoefficientPath:
    """Coefficient q - zeta I (zeta < 0 adds coercivity)."""
    d = qpath.dim
    return CoefficientPath(lambda t: qpath.q(t) - zeta * np.eye(d), qpath.epsilon_bar, d)


def absorption_cross_check(qpath: CoefficientPath, rhs: WeightedGridFunction,
                           ks=(2, 3, 4, 5, 6)) -> dict:
    """Solve with q - zeta I for zeta = -10^-k and extrapolate zeta -> 0.

    Returns the extrapolated values, the direct solution and their weighted
    distance; the zeta-family converges to the decaying solution.
    """
    direct = solve_decaying(qpath, rhs)
    sols = []
    zetas = [-(10.0 ** -k) for k in ks]
    for zeta in zetas:
        sols.append(solve_decaying(shifted_path(qpath, zeta), rhs).values)
    # Richardson on the last two (linear in zeta)
    z1, z2 = sols[-2], sols[-1]
    ratio = zetas[-2] / zetas[-1]
    extrap = (ratio * z2 - z1) / (ratio - 1.0)
    diffs = [weighted_norm(rhs.grid, s_ - direct.values, rhs.s) for s_ in sols]
    return {"zetas": zetas, "distances": diffs,
            "extrapolated_distance": weighted_norm(rhs.grid, extrap - direct.values, rhs.s)}


def refinement_study(qpath: CoefficientPath, rhs_func: Callable[[np.ndarray], np.ndarray],
                     t_max: float = T_MAX, n0: int = 500, levels: int = 4,
                     exact: Callable[[np.ndarray], np.ndarray] | None = None,
                     window: float | None = None) -> dict:
    """Max-norm errors under grid doubling on [1, window] (default t_max/2).

    With an exact solution the errors are against it; otherwise successive
    differences are used.  Reports observed orders log2(e_k / e_{k+1}).
    """
    window = t_max / 2.0 if window is None else window
    errs = []
    prev = None
    for lev in range(levels):
        grid = log_grid(t_max, n0 * 2**lev)
        f = rhs_func(grid)
        if f.ndim == 1:
            f = f[:, None]
        z = solve_decaying(qpath, WeightedGridFunction(grid, f), check_hardy=False).values
        mask = grid <= window
        if exact is not None:
            ex = exact(grid)
            ex = ex[:, None] if ex.ndim == 1 else ex
            errs.append(float(np.max(np.abs(z - ex)[mask])))
        elif prev is not None:
            pg, pz = prev
            coarse = z[::2]
            errs.append(float(np.max(np.abs(coarse - pz)[pg <= window])))
        prev = (grid, z)
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)
              if errs[i + 1] > 0 and errs[i] > 0]
    if len(errs) >= 2 and errs[-1] > 0.5 * errs[-2] and errs[-2] > 1e-13:
        raise NonConvergenceError(f"refinement ratio {errs[-1] / errs[-2]:.3f} exceeds 0.5")
    return {"errors": errs, "orders": orders}
