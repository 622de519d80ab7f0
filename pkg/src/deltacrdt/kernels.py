"""Kernel selection.

The compiled ``_kernels`` extension is used when it was built; otherwise the
pure-Python ``_pykernels`` module is used. Setting ``DELTACRDT_PURE=1`` in the
environment forces the fallback.
"""

from __future__ import annotations

import os

from . import _pykernels

if os.environ.get("DELTACRDT_PURE", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _pykernels

IMPLEMENTATION: str = _impl.IMPLEMENTATION

max_merge = _impl.max_merge
compact = _impl.compact
ctx_contains = _impl.ctx_contains
ctx_union = _impl.ctx_union
dotset_join = _impl.dotset_join
dotfun_join = _impl.dotfun_join

__all__ = [
    "IMPLEMENTATION",
    "compact",
    "ctx_contains",
    "ctx_union",
    "dotfun_join",
    "dotset_join",
    "max_merge",
]
