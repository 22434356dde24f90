"""Kernel backend selection.

The compiled extension is used when it imported successfully and the
``SVRMPC_FORCE_PY_KERNELS`` environment variable is unset; otherwise the
pure-Python reference kernels take over. Both backends implement the
same arithmetic and produce bit-identical results.
"""

import os

from . import planar_py

if os.environ.get("SVRMPC_FORCE_PY_KERNELS"):
    _impl = planar_py
    BACKEND = "python"
else:
    try:
        from . import _planar_cy as _impl
        BACKEND = "compiled"
    except ImportError:
        _impl = planar_py
        BACKEND = "python"

planar_step = _impl.planar_step
planar_linearize = _impl.planar_linearize


def compiled_available() -> bool:
    try:
        from . import _planar_cy  # noqa: F401
        return True
    except ImportError:
        return False
