"""Kernel backend selection.

The compiled extension is preferred; set ``MIXPOST_BACKEND=python`` to force
the NumPy fallback (useful for benchmarking and cross-checking).
"""
from __future__ import annotations

import os

from . import _fallback

_requested = os.environ.get("MIXPOST_BACKEND", "auto").lower()
if _requested not in {"auto", "compiled", "python"}:
    raise ImportError(f"unknown MIXPOST_BACKEND={_requested!r}")

_compiled = None
if _requested != "python":
    try:
        from . import _kernels as _compiled
    except ImportError:
        if _requested == "compiled":
            raise

kernels = _compiled if _compiled is not None else _fallback
BACKEND = "compiled" if _compiled is not None else "python"

__all__ = ["kernels", "BACKEND", "_fallback", "_compiled"]
