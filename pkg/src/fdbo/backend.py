"""Kernel backend selection.

Hot kernels ship in two flavors: numba-compiled loops and pure-numpy
array code.  The numpy path is authoritative for semantics; the numba
path must agree bit-for-bit up to floating-point reassociation (tested).
Set ``FDBO_DISABLE_NUMBA=1`` to force the numpy path, e.g. on platforms
without a working numba install or when debugging.

``FDBO_THREADS`` caps the worker-thread count used by the embarrassingly
parallel sweeps (per-N inflation scans, per-block norm estimates).
Results are reduced in fixed index order, so the thread count never
affects output bytes.
"""

from __future__ import annotations

import os


def _env_flag(name: str) -> bool:
    return os.environ.get(name, "").strip().lower() in ("1", "true", "yes", "on")


_DISABLED = _env_flag("FDBO_DISABLE_NUMBA")

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _DISABLED

# Shared options for every jitted kernel.  fastmath stays off: the
# numpy and numba paths are required to agree to ~1 ulp per operation.
NUMBA_OPTS = {"cache": True, "nogil": True, "fastmath": False}


def njit(func=None, **kw):
    """``numba.njit`` when enabled, identity decorator otherwise."""
    if USE_NUMBA:
        opts = dict(NUMBA_OPTS)
        opts.update(kw)
        if func is None:
            return numba.njit(**opts)
        return numba.njit(**opts)(func)
    if func is None:
        return lambda f: f
    return func


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"


def thread_cap() -> int:
    """Worker count for sweep-level parallelism (FDBO_THREADS, >= 1)."""
    raw = os.environ.get("FDBO_THREADS", "")
    try:
        cap = int(raw)
    except ValueError:
        cap = 0
    if cap < 1:
        cap = min(os.cpu_count() or 1, 8)
    return cap
