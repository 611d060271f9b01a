"""Kernel backend selection: compiled ``_core`` when importable, else ``_fallback``."""

import os

from . import _fallback

BACKENDS = {"python": _fallback}

try:
    from . import _core
except ImportError:  # extension not built
    _core = None
else:
    BACKENDS["cython"] = _core

if _core is not None and not os.environ.get("DUALBEV_PURE_PYTHON"):
    BACKEND = "cython"
else:
    BACKEND = "python"

_impl = BACKENDS[BACKEND]
segment_sum_sorted = _impl.segment_sum_sorted
interval_pool = _impl.interval_pool
edt_sq = _impl.edt_sq
grid_bfs = _impl.grid_bfs
