"""Kernel backend selection.

The hypothesis-scoring kernel exists twice: a numba ``@njit`` version and a
pure-numpy fallback with identical semantics.  Selection order:

1. ``AMBCIQ_BACKEND=numpy`` or ``AMBCIQ_BACKEND=numba`` in the environment
   forces that backend (requesting numba without numba installed fails).
2. Otherwise numba is used when importable, numpy otherwise.

``benchmarks/bench_backends.py`` times the two side by side.
"""

from __future__ import annotations

import os

from . import _kernels_numpy

_FLAG = os.environ.get("AMBCIQ_BACKEND", "").strip().lower()

if _FLAG not in ("", "numpy", "numba"):
    raise RuntimeError(f"AMBCIQ_BACKEND must be 'numpy' or 'numba', got {_FLAG!r}")

if _FLAG == "numpy":
    _impl = _kernels_numpy
    _name = "numpy"
else:
    try:
        from . import _kernels_numba as _impl
        _name = "numba"
    except ImportError:
        if _FLAG == "numba":
            raise
        _impl = _kernels_numpy
        _name = "numpy"


def active_backend() -> str:
    """Name of the kernel backend in use ('numba' or 'numpy')."""
    return _name


def residual_sq(zt, base, A, B, rho):
    """Dispatch to the active backend's hypothesis-scoring kernel."""
    return _impl.residual_sq(zt, base, A, B, rho)
