"""Numba dispatch.

Set ``RWL_NUMBA=0`` in the environment before import to run the pure-numpy
kernels instead of the compiled ones.
"""

import os

_flag = os.environ.get("RWL_NUMBA", "1").strip().lower()
USE_NUMBA = _flag not in ("0", "false", "no", "off")

if USE_NUMBA:
    try:
        import numba
    except ImportError:  # pragma: no cover
        USE_NUMBA = False

if USE_NUMBA:
    JIT_OPTIONS = {"nogil": True, "cache": True}

    def njit(func):
        return numba.njit(**JIT_OPTIONS)(func)

else:
    JIT_OPTIONS = {}

    def njit(func):
        return func
