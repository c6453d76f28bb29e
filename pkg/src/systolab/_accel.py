"""Numba acceleration switch.

Hot kernels (fast marching, lattice enumeration) are written as plain
Python functions operating on numpy arrays and compiled with ``@njit``
when numba is available.  Setting the environment variable
``SYSTOLAB_DISABLE_NUMBA=1`` before import selects the pure-Python/numpy
fallback path; ``benchmarks/bench_kernels.py`` compares the two.
"""

import os

_DISABLED = os.environ.get("SYSTOLAB_DISABLE_NUMBA", "0") not in ("0", "", "false", "False")

if not _DISABLED:
    try:
        from numba import njit as _njit
        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover
        NUMBA_ENABLED = False
else:
    NUMBA_ENABLED = False


def maybe_njit(func):
    """Compile ``func`` with numba unless the fallback path is selected."""
    if NUMBA_ENABLED:
        return _njit(cache=True)(func)
    return func
