"""Numba toggle shared by every kernel module.

Set ``SUPERCRIT_DISABLE_NUMBA=1`` before import to run all kernels as plain
Python/NumPy.  Results agree with the compiled path to rounding.
"""
import os

_FLAG = os.environ.get("SUPERCRIT_DISABLE_NUMBA", "").strip().lower()
DISABLED = _FLAG in ("1", "true", "yes", "on")

try:  # pragma: no cover - exercised implicitly
    if DISABLED:
        raise ImportError
    import numba

    NUMBA_ENABLED = True
except ImportError:  # pragma: no cover
    numba = None
    NUMBA_ENABLED = False


def njit(*args, **kwargs):
    """``numba.njit(cache=True, nogil=True)`` or a no-op decorator."""
    if NUMBA_ENABLED:
        kwargs.setdefault("cache", True)
        kwargs.setdefault("nogil", True)
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn


def py_func(fn):
    """Uncompiled body of a kernel (identity when numba is off)."""
    return getattr(fn, "py_func", fn)


def thread_count():
    env = os.environ.get("SUPERCRIT_THREADS")
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


def pure_module(module):
    """Re-execute a kernel module with ``njit`` as the identity.

    Used for custom growth models whose ``g`` is ordinary Python, and by the
    benchmark to time both paths in one process.
    """
    import importlib.util
    import sys

    name = module.__name__ + "_pure"
    if name in sys.modules:
        return sys.modules[name]
    spec = importlib.util.spec_from_file_location(name, module.__file__)
    mod = importlib.util.module_from_spec(spec)
    mod.__package__ = module.__package__
    mod.__dict__["_PURE"] = True
    sys.modules[name] = mod
    spec.loader.exec_module(mod)
    return mod


def kernel_module(module, g01=None, *, pure: bool = False):
    """Private copy of a kernel module with ``_g01`` bound to ``g01``.

    Compiled copies skip the disk cache (the cache is keyed on the source
    file, which the copy shares with the original).
    """
    import importlib.util

    spec = importlib.util.spec_from_file_location(module.__name__ + "_custom", module.__file__)
    mod = importlib.util.module_from_spec(spec)
    mod.__package__ = module.__package__
    mod.__dict__.update(_G01=g01, _PURE=pure, _NO_CACHE=True)
    spec.loader.exec_module(mod)
    return mod


def identity(*args, **kwargs):
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn
