"""Kernel selection: the compiled core when importable, else pure Python.

Set ``DETFREE_KERNELS=python`` to force the fallback.
"""

import os

from . import _kernels_py

_forced = os.environ.get("DETFREE_KERNELS", "").lower()

if _forced == "python":
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        if _forced == "compiled":
            raise
        _impl = _kernels_py

BACKEND = _impl.BACKEND
nullspace_mod = _impl.nullspace_mod
rank_profile_mod = _impl.rank_profile_mod
det_mod = _impl.det_mod

__all__ = ["BACKEND", "nullspace_mod", "rank_profile_mod", "det_mod"]
