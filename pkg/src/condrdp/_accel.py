"""Numba dispatch.

Hot kernels are written once as plain Python/NumPy and compiled with
``numba.njit`` unless ``CONDRDP_DISABLE_NUMBA`` is set to a truthy value
(or numba is not importable). The flag is read at import time.
"""
import os

_FLAG = os.environ.get("CONDRDP_DISABLE_NUMBA", "").strip().lower()

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _FLAG not in ("1", "true", "yes", "on")


def njit(fn):
    """Compile ``fn`` when numba is enabled, otherwise return it unchanged.

    The uncompiled function is always reachable as ``.py_func`` so that
    benchmarks can time both paths in one process.
    """
    if USE_NUMBA:
        return numba.njit(cache=True)(fn)
    fn.py_func = fn
    return fn


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
