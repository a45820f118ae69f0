"""Switch between numba-compiled kernels and the plain numpy path.

Set ``BELLINCOMPAT_DISABLE_JIT=1`` to force the numpy implementations (useful
for debugging and for the benchmark). If numba is not importable the numpy
path is used regardless.
"""

import os

_FLAG = "BELLINCOMPAT_DISABLE_JIT"


def jit_disabled() -> bool:
    return os.environ.get(_FLAG, "").strip().lower() in {"1", "true", "yes", "on"}


try:
    if jit_disabled():
        raise ImportError
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False
    _njit = None


def njit(*args, **kwargs):
    """``numba.njit`` with caching on, or an identity decorator without numba."""
    if not HAVE_NUMBA:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    return _njit(*args, **kwargs)


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
