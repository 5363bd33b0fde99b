"""Kernel dispatch: compiled extension when available, pure Python otherwise.

Set ``SCADASIM_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
if not os.environ.get("SCADASIM_PURE_PYTHON"):
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
else:
    _impl = _kernels_py

ones_complement_sum = _impl.ones_complement_sum
integrate = _impl.integrate

__all__ = ["BACKEND", "ones_complement_sum", "integrate"]
