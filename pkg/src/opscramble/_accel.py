"""Numba detection and the backend switch.

Set ``OPSCRAMBLE_DISABLE_NUMBA=1`` to force the pure-numpy kernels even when
numba is importable. The flag is read once, at import time.
"""
import os

_FLAG = os.environ.get("OPSCRAMBLE_DISABLE_NUMBA", "").strip().lower()
DISABLED_BY_ENV = _FLAG not in ("", "0", "false", "no")

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is optional
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not DISABLED_BY_ENV


def njit(*args, **kwargs):
    """``numba.njit`` when numba is installed, otherwise a no-op decorator.

    The compiled function is always produced when numba is available so that
    benchmarks and agreement tests can reach it; ``USE_NUMBA`` only decides
    which implementation the public kernels dispatch to.
    """
    if HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
