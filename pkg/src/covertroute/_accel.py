"""Numba switch.

Kernels are written once as plain Python loops and compiled with ``numba.njit``
when numba is importable and ``COVERTROUTE_DISABLE_NUMBA`` is not set to a
truthy value. Otherwise the vectorized numpy fallbacks in :mod:`kernels` run.
"""

import os

DISABLE_ENV = "COVERTROUTE_DISABLE_NUMBA"

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False


def _env_disabled():
    return os.environ.get(DISABLE_ENV, "").strip().lower() in ("1", "true", "yes", "on")


USE_NUMBA = HAVE_NUMBA and not _env_disabled()


def njit(func):
    """Compile ``func`` in nopython mode if numba is installed; identity otherwise.

    Compilation does not depend on :data:`USE_NUMBA` so benchmarks and tests can
    call both paths in one process.
    """
    if not HAVE_NUMBA:
        return func
    return numba.njit(cache=True)(func)


def backend():
    return "numba" if USE_NUMBA else "numpy"
