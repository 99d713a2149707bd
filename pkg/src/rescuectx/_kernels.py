"""Backend selection for the hot kernels.

The compiled ``_speedups`` module is used when it was built; otherwise the
pure-Python twin is used.  Set ``RESCUECTX_PURE=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _pure

if os.environ.get("RESCUECTX_PURE"):
    _impl = _pure
    BACKEND = "python"
else:
    try:
        from . import _speedups as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _pure
        BACKEND = "python"

project_polyline = _impl.project_polyline
dpll_solve = _impl.dpll_solve

__all__ = ["BACKEND", "project_polyline", "dpll_solve"]
