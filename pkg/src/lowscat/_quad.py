"""Composite Gauss-Legendre rules used by the quadrature routines.

The improper integrals in this package have either an integrable endpoint
singularity or a near-singularity that moves towards an endpoint as a
parameter approaches its limit.  Panels that shrink geometrically towards
that endpoint make a fixed Gauss rule per panel converge uniformly in the
parameter, and the whole rule is a plain weighted sum that vectorises.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def gauss_legendre_unit(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def composite_rule(edges: np.ndarray, n: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of an n-point Gauss rule on every panel of ``edges``."""
    edges = np.asarray(edges, dtype=float)
    x, w = gauss_legendre_unit(n)
    a = edges[:-1, None]
    h = np.diff(edges)[:, None]
    return (a + h * x).ravel(), (h * w).ravel()


@lru_cache(maxsize=64)
def graded_unit_rule(levels: int = 40, n: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Rule on [0, 1] with panels [2^-k-1, 2^-k] down to 2^-levels, then [0, 2^-levels]."""
    edges = np.concatenate(([0.0], 2.0 ** -np.arange(levels, -1, -1, dtype=float)))
    x, w = composite_rule(edges, n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def mean_on_segment(func, a: np.ndarray, b: np.ndarray, n: int = 8) -> np.ndarray:
    """Average of ``func`` over [a, b], elementwise in a and b.

    Used to form differences f(b) - f(a) = (b - a) * mean(f') without
    cancellation when b is close to a.
    """
    x, w = gauss_legendre_unit(n)
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    return np.sum(func(a + (b - a) * x) * w, axis=-1)
