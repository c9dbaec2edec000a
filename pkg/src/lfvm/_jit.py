"""Backend switch for the numeric kernels.

Set ``LFVM_DISABLE_NUMBA=1`` to run every kernel as plain Python/NumPy.
The flag is read once at import time.
"""

import os

_FLAG = os.environ.get("LFVM_DISABLE_NUMBA", "").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and _FLAG not in ("1", "true", "yes", "on")


def njit(func):
    """Compile ``func`` with numba when enabled, else return it unchanged."""
    if USE_NUMBA:
        return numba.njit(cache=True)(func)
    return func


def backend():
    return "numba" if USE_NUMBA else "python"
