"""Backend selection for the inner loops.

The compiled module is used when it imports; set ``CSACH_PURE_PYTHON=1``
to force the reference implementation.  Both expose the same functions.
"""
from __future__ import annotations

import os

import numpy as np

from . import _pykernels

if os.environ.get("CSACH_PURE_PYTHON"):
    _ckernels = None
else:
    try:
        from . import _ckernels
    except ImportError:
        _ckernels = None

BACKEND = "cython" if _ckernels is not None else "python"
impl = _ckernels if _ckernels is not None else _pykernels


def backend_module(name: str | None = None):
    """Kernel module by name (``"cython"`` / ``"python"``); the active one by default."""
    if name is None:
        return impl
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels as compiled

        return compiled
    raise ValueError(f"unknown backend {name!r}")


def compiled_available() -> bool:
    """True when the compiled module can be imported, even if it is not the active one."""
    try:
        backend_module("cython")
    except ImportError:
        return False
    return True


def as_backend(arr, module=None):
    """Array in the layout a backend wants: numpy for compiled, lists for Python."""
    module = impl if module is None else module
    if module is _pykernels:
        return arr.tolist() if isinstance(arr, np.ndarray) else arr
    return np.ascontiguousarray(arr)


def new_labels(n: int, rows: int | None = None, module=None):
    """``(dist, arcs)`` label arrays filled with ``inf`` / ``-1``."""
    module = impl if module is None else module
    if module is _pykernels:
        if rows is None:
            return [np.inf] * n, [-1] * n
        return [[np.inf] * n for _ in range(rows)], [[-1] * n for _ in range(rows)]
    shape = n if rows is None else (rows, n)
    return np.full(shape, np.inf), np.full(shape, -1, dtype=np.int64)
