"""Optional numba acceleration.

Kernels in :mod:`stiefel_flows._kernels` are written in the numpy subset that
numba compiles. Setting ``STIEFEL_FLOWS_NUMBA=0`` (read once, at import) runs
the same source as plain numpy instead.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None

_FLAG = os.environ.get("STIEFEL_FLOWS_NUMBA", "1").strip().lower()
USE_NUMBA = numba is not None and _FLAG not in ("0", "false", "no", "off")


def jit(fn):
    if USE_NUMBA:
        return numba.njit(cache=True)(fn)
    return fn
