"""Numba switch for the hot kernels.

Kernels in :mod:`multibubble._kernels` are written once as plain Python over
scalars and numpy arrays.  When numba is importable they are compiled with
``njit``; setting ``MULTIBUBBLE_DISABLE_NUMBA=1`` before import keeps the
interpreted versions.  Results agree to round-off between the two paths.
"""

import os

_FLAG = "MULTIBUBBLE_DISABLE_NUMBA"

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

DISABLED = os.environ.get(_FLAG, "").strip().lower() in ("1", "true", "yes", "on")
NUMBA_ENABLED = numba is not None and not DISABLED


def jit(fn):
    if not NUMBA_ENABLED:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


def backend_name():
    return "numba" if NUMBA_ENABLED else "python"
