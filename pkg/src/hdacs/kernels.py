"""Recovery kernel backend selection.

The compiled extension is preferred; the numpy fallback implements the same
loop and is selected automatically when the extension is unavailable, or
explicitly by setting HDACS_PURE_PYTHON=1 (useful for the backend benchmark
and parity tests).
"""

from __future__ import annotations

import os

from . import _cosamp_py

if os.environ.get("HDACS_PURE_PYTHON"):
    _impl = _cosamp_py
    BACKEND = "python"
else:
    try:
        from . import _cosamp_cy as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _cosamp_py
        BACKEND = "python"

cosamp_loop = _impl.cosamp_loop


def available_backends():
    """Name -> cosamp_loop for every importable backend."""
    impls = {"python": _cosamp_py.cosamp_loop}
    try:
        from . import _cosamp_cy

        impls["cython"] = _cosamp_cy.cosamp_loop
    except ImportError:
        pass
    return impls
