"""Kernel selection: compiled extension when importable, pure Python otherwise."""

from __future__ import annotations

import os

BACKEND = "python"

if os.environ.get("FLOPQLH_PURE_PYTHON") != "1":
    try:
        from ._ckernel import div_linear, mul_linear  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        from ._kernel_py import div_linear, mul_linear
else:
    from ._kernel_py import div_linear, mul_linear

__all__ = ["BACKEND", "div_linear", "mul_linear"]
