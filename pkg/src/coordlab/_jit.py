"""
Numba switch for the hot kernels.

Setting ``COORDLAB_NO_NUMBA=1`` in the environment (before import) swaps every
jitted kernel for its vectorized numpy counterpart, which is handy for
debugging and for the benchmark in ``benchmarks/bench_kernels.py``.
"""

import os

JIT_ENABLED = os.environ.get("COORDLAB_NO_NUMBA", "").strip().lower() not in ("1", "true", "yes")

if JIT_ENABLED:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a hard dependency, but stay importable
        JIT_ENABLED = False

if not JIT_ENABLED:

    def njit(func=None, **kwargs):
        if func is not None:
            return func

        def wrapper(f):
            return f

        return wrapper


def kernel_backend() -> str:
    return "numba" if JIT_ENABLED else "numpy"
