"""Pure NumPy block-tridiagonal solver, used when the compiled kernel is unavailable."""

from __future__ import annotations

import numpy as np


def block_thomas(lower, diag, upper, rhs):
    """Solve lower[j] w[j-1] + diag[j] w[j] + upper[j] w[j+1] = rhs[j].

    Shapes (n, d, d) for the blocks and (n, d, m) for the right-hand side;
    lower[0] and upper[n-1] are ignored.
    """
    lower = np.asarray(lower, dtype=float)
    diag = np.asarray(diag, dtype=float)
    upper = np.asarray(upper, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    n, d, _ = diag.shape
    m = rhs.shape[2]
    work = np.empty((n, d, d + m))
    rhs_block = np.empty((d, d + m))
    for j in range(n):
        piv = diag[j].copy()
        rhs_block[:, :d] = upper[j] if j < n - 1 else 0.0
        rhs_block[:, d:] = rhs[j]
        if j > 0:
            piv -= lower[j] @ work[j - 1, :, :d]
            rhs_block[:, d:] -= lower[j] @ work[j - 1, :, d:]
        try:
            work[j] = np.linalg.solve(piv, rhs_block)
        except np.linalg.LinAlgError as exc:
            raise ZeroDivisionError("singular diagonal block in block-tridiagonal solve") from exc
    out = np.empty((n, d, m))
    out[-1] = work[-1, :, d:]
    for j in range(n - 2, -1, -1):
        out[j] = work[j, :, d:] - work[j, :, :d] @ out[j + 1]
    return out


def radial_remainder(pts, r, z, d1, d2, d3, weights):
    """Weighted sum over l of D^3 V1(pts[l, j]){z_j, z_j}; see the compiled kernel."""
    u = pts / r[..., None]
    a = np.einsum("lni,ni->ln", u, z)
    zz = np.einsum("ni,ni->n", z, z)[None, :]
    bp = d2 / r - d1 / r**2
    t1 = (d2 - d1 / r) / r
    cu = (d3 - bp) * a**2 + t1 * (zz - 2.0 * a**2)
    cz = (t1 + bp) * a
    w = np.asarray(weights)[:, None]
    return np.einsum("ln,lni->ni", w * cu, u) + np.einsum("ln,ni->ni", w * cz, z)
