"""Optional numba acceleration.

Kernels in :mod:`gje.kernels` come in two flavours: a numba ``@njit`` version
and a vectorised numpy version. Which one runs is decided per call from the
environment so tests and benchmarks can flip between them:

* ``GJE_DISABLE_NUMBA=1`` forces the numpy path.
* ``GJE_THREADS=<k>`` caps numba's thread pool.
"""

import os

try:
    import numba
    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None
    HAS_NUMBA = False


def numba_enabled():
    flag = os.environ.get("GJE_DISABLE_NUMBA", "").strip().lower()
    return HAS_NUMBA and flag not in ("1", "true", "yes", "on")


def optional_njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity otherwise.

    Usable bare (``@optional_njit``) or with options (``@optional_njit(parallel=True)``).
    """
    kwargs.setdefault("cache", True)
    if len(args) == 1 and callable(args[0]) and not kwargs.keys() - {"cache"}:
        func = args[0]
        return numba.njit(cache=kwargs["cache"])(func) if HAS_NUMBA else func

    def decorator(func):
        if HAS_NUMBA:
            return numba.njit(*args, **kwargs)(func)
        return func

    return decorator


if HAS_NUMBA:
    prange = numba.prange
else:  # pragma: no cover
    prange = range


def configure_threads():
    """Apply the ``GJE_THREADS`` cap; returns the active thread count."""
    if not HAS_NUMBA:
        return 1
    cap = os.environ.get("GJE_THREADS")
    limit = numba.config.NUMBA_NUM_THREADS
    if cap:
        try:
            limit = max(1, min(int(cap), limit))
        except ValueError:
            pass
    numba.set_num_threads(limit)
    return limit
