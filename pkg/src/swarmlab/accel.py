"""Kernel acceleration switch.

Hot inner loops (ant clustering, trail colonies) are written as plain
scalar loops over numpy arrays and compiled with numba's ``@njit``.
Setting the environment variable ``SWARMLAB_NO_NUMBA=1`` (or running
without numba installed) selects the uncompiled fallback: the same
source executed by the interpreter, so both backends produce
bit-identical results.

``benchmarks/bench_backends.py`` compares the two paths.
"""

import os


def _no_jit(*args, **kwargs):
    if args and callable(args[0]) and not kwargs:
        return args[0]

    def wrap(func):
        return func

    return wrap


_flag = os.environ.get("SWARMLAB_NO_NUMBA", "").strip().lower()
_want_numba = _flag not in ("1", "true", "yes")

if _want_numba:
    try:
        from numba import njit as _numba_njit

        def njit(*args, **kwargs):
            kwargs.setdefault("cache", True)
            return _numba_njit(*args, **kwargs)

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a hard dep, but stay runnable
        njit = _no_jit
        NUMBA_ENABLED = False
else:
    njit = _no_jit
    NUMBA_ENABLED = False


def backend_name() -> str:
    """Which backend the kernels run on: 'numba' or 'python'."""
    return "numba" if NUMBA_ENABLED else "python"
