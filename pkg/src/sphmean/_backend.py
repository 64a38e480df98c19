"""Numba / pure-numpy backend selection.

Set ``SPHMEAN_NUMBA=0`` before import to force the numpy fallback. Both paths
compute the same quantities; the numba kernels only exist for speed.
"""

from __future__ import annotations

import os

_FLAG = os.environ.get("SPHMEAN_NUMBA", "1").strip().lower()

try:  # pragma: no cover - exercised implicitly
    import numba

    HAVE_NUMBA = True
    if "NUMBA_THREADING_LAYER" not in os.environ:
        # avoid probing an incompatible system TBB on import
        numba.config.THREADING_LAYER = "workqueue"
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _FLAG not in ("0", "false", "no", "off")
BACKEND = "numba" if USE_NUMBA else "numpy"


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity decorator otherwise."""
    if HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)

    def wrap(fn):
        return fn

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return wrap


# numba needs to see its own ``prange`` object inside jitted code
prange = numba.prange if HAVE_NUMBA else range


def set_threads(n: int | None) -> int:
    """Set the numba worker count; returns the count actually in effect."""
    if not HAVE_NUMBA:
        return 1
    limit = numba.config.NUMBA_NUM_THREADS
    if n is None or n <= 0:
        n = limit
    n = max(1, min(int(n), limit))
    numba.set_num_threads(n)
    return n
