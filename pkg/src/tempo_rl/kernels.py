"""Kernel selection.

The compiled extension is used when it was built; otherwise, or when the
environment variable ``TEMPO_RL_PURE`` is set to a non-empty value other than
``0``, the NumPy/Python fallback is used.
"""

from __future__ import annotations

import os

from . import _kernels_py

_force_pure = os.environ.get("TEMPO_RL_PURE", "") not in ("", "0")

compiled = None
if not _force_pure:
    try:
        from . import _kernels as compiled  # type: ignore[no-redef]
    except ImportError:  # extension not built
        compiled = None

_active = compiled if compiled is not None else _kernels_py


def backend() -> str:
    return _active.BACKEND


def use(name: str) -> None:
    """Switch backend at runtime (``"cython"`` or ``"python"``)."""
    global _active
    if name == "python":
        _active = _kernels_py
    elif name == "cython":
        if compiled is None:
            raise RuntimeError("compiled kernels are not available")
        _active = compiled
    else:
        raise ValueError(name)


def stn_close(D, n, j, i, w, inf) -> bool:
    if D.dtype == object:
        return _kernels_py.stn_close(D, n, j, i, w, inf)
    return _active.stn_close(D, n, j, i, w, inf)


def relaxed_fixpoint(pre_ptr, pre_idx, add_ptr, add_idx, cost, sup, inf) -> None:
    _active.relaxed_fixpoint(pre_ptr, pre_idx, add_ptr, add_idx, cost, sup, inf)
