"""Switch between numba-compiled kernels and the pure-numpy fallback.

Set ``HERALDIC_NUMBA=0`` before import to force the numpy path.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

USE_NUMBA = numba is not None and os.environ.get("HERALDIC_NUMBA", "1") != "0"


def njit(fn):
    if USE_NUMBA:
        return numba.njit(cache=True, nogil=True)(fn)
    return fn
