"""numba shim: plain Python fallback when numba is unavailable or disabled."""

import os

try:
    if os.environ.get("BETALOG_DISABLE_JIT"):
        raise ImportError
    from numba import njit as _njit

    def njit(*args, **kwargs):
        kwargs.setdefault("cache", True)
        kwargs.setdefault("nogil", True)
        return _njit(*args, **kwargs)

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

    HAVE_NUMBA = False
