"""numba switch.

Set ``HGUM_DISABLE_NUMBA=1`` to run every kernel as plain Python over numpy
arrays (same code path, no compilation).
"""
import os

DISABLED = os.environ.get("HGUM_DISABLE_NUMBA", "").strip().lower() not in ("", "0", "false", "no")

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

JIT_ENABLED = numba is not None and not DISABLED


def njit(fn=None, **opts):
    if not JIT_ENABLED:
        return fn if fn is not None else (lambda f: f)
    opts.setdefault("cache", True)
    opts.setdefault("nogil", True)
    if fn is None:
        return numba.njit(**opts)
    return numba.njit(**opts)(fn)


def python_impl(fn):
    """The uncompiled function behind a kernel (itself when numba is off)."""
    return getattr(fn, "py_func", fn)
