"""
Numba shim.

Set ``INFOFRONTIER_DISABLE_JIT=1`` to route every hot kernel through its
pure-numpy implementation instead of the compiled one. The flag is read once,
at import time.
"""
import os

_DISABLED = os.environ.get("INFOFRONTIER_DISABLE_JIT", "").strip().lower() in {
    "1", "true", "yes", "on",
}

try:
    import numba as _numba
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is an optional extra
    _numba = None
    HAVE_NUMBA = False

JIT_ENABLED = HAVE_NUMBA and not _DISABLED


if HAVE_NUMBA:
    def njit(*args, **kwargs):
        kwargs.setdefault("cache", True)
        kwargs.setdefault("nogil", True)
        return _numba.njit(*args, **kwargs)
else:  # pragma: no cover
    def njit(func=None, **kwargs):
        if func is not None:
            return func

        def wrapper(f):
            return f

        return wrapper
