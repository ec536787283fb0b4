"""Backend selection for the hot kernels.

The compiled extension is used when it imports; setting the environment
variable LOWSCAT_PURE=1 forces the NumPy fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
block_thomas = _kernels_py.block_thomas
radial_remainder = _kernels_py.radial_remainder

if os.environ.get("LOWSCAT_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # pragma: no cover - depends on the build
        pass
    else:
        block_thomas = _compiled.block_thomas
        radial_remainder = _compiled.radial_remainder
        BACKEND = "cython"

__all__ = ["BACKEND", "block_thomas", "radial_remainder"]
