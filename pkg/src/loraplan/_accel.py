"""Optional numba acceleration.

Set ``LORAPLAN_NO_NUMBA=1`` to force the pure-numpy/python paths.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and os.environ.get("LORAPLAN_NO_NUMBA", "0").lower() in ("", "0", "false", "no")


def njit(func):
    """Compile ``func`` in nopython mode when numba is available, else return it unchanged."""
    if not HAVE_NUMBA:
        return func
    return numba.njit(cache=True)(func)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
