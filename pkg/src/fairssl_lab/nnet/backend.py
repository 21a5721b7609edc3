"""Kernel backend selection.

The compiled extension is optional; the numpy module implements the identical
contract. FAIRSSL_LAB_KERNELS=auto|python|compiled (read once at import)
overrides the default of using the extension when it built.
"""
from __future__ import annotations

import os

from . import _np_kernels

_choice = os.environ.get("FAIRSSL_LAB_KERNELS", "auto").strip().lower()
if _choice not in ("auto", "python", "compiled"):
    raise RuntimeError(
        f"FAIRSSL_LAB_KERNELS={_choice!r} not understood (use auto, python or compiled)"
    )

if _choice == "python":
    _impl = _np_kernels
else:
    try:
        from . import _speedups as _impl  # type: ignore[no-redef]
    except ImportError:
        if _choice == "compiled":
            raise RuntimeError(
                "FAIRSSL_LAB_KERNELS=compiled but the extension is not built; "
                "reinstall the package with Cython available"
            )
        _impl = _np_kernels

KERNELS = _impl.NAME

matmul_nn = _impl.matmul_nn
matmul_tn = _impl.matmul_tn
matmul_nt = _impl.matmul_nt
relu = _impl.relu
relu_grad_inplace = _impl.relu_grad_inplace
add_bias_inplace = _impl.add_bias_inplace
adam_step_inplace = _impl.adam_step_inplace


def available_backends():
    out = ["python"]
    try:
        from . import _speedups  # noqa: F401
        out.append("compiled")
    except ImportError:
        pass
    return out


def get_kernels(name: str):
    """Fetch a specific kernel module (for cross-checking and benchmarks)."""
    if name == "python":
        return _np_kernels
    if name == "compiled":
        from . import _speedups
        return _speedups
    raise ValueError(f"unknown kernel backend {name!r}")
