"""Numba shim.

Set ``LOSSLANDSCAPE_NUMBA=0`` to force the pure-numpy kernels even when
numba is importable. The flag is read once at import time.
"""
import os

_FLAG = os.environ.get("LOSSLANDSCAPE_NUMBA", "1").strip().lower()
_REQUESTED = _FLAG not in ("0", "false", "no", "off")

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - depends on environment
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f


USE_NUMBA = NUMBA_AVAILABLE and _REQUESTED
BACKEND = "numba" if USE_NUMBA else "numpy"
