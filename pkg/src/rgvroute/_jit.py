"""Optional numba acceleration.

Set ``RGVROUTE_DISABLE_NUMBA=1`` to run every kernel as plain Python/numpy.
The same source is used for both paths, so results agree bit for bit up to
floating point reassociation inside numba.
"""
import os

_FLAG = os.environ.get("RGVROUTE_DISABLE_NUMBA", "").strip().lower()
DISABLED = _FLAG in ("1", "true", "yes", "on")

try:
    if DISABLED:
        raise ImportError("numba disabled by environment")
    import numba as _numba
    from numba import types as _types
    from numba.typed import Dict as _Dict

    HAVE_NUMBA = True
except ImportError:
    _numba = None
    HAVE_NUMBA = False


def njit(*args, **kwargs):
    """``numba.njit`` with caching on, or the identity decorator."""
    if HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        return _numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrap(fn):
        return fn

    return wrap


def int_map():
    """An int64 -> int64 hash map usable from inside kernels."""
    if HAVE_NUMBA:
        return _Dict.empty(key_type=_types.int64, value_type=_types.int64)
    return {}


def backend_name():
    return "numba" if HAVE_NUMBA else "python"
