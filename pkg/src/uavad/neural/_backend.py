"""Kernel backend selection.

The compiled extension is preferred when importable; set UAVAD_BACKEND to
``python`` to force the NumPy fallback or ``compiled`` to fail loudly when
the extension is missing.  Results agree across backends to rounding
error, but bit-level reproducibility is only guaranteed within one
backend.
"""

import os

_choice = os.environ.get("UAVAD_BACKEND", "auto")
if _choice not in ("auto", "compiled", "python"):
    raise ValueError(
        f"UAVAD_BACKEND must be auto, compiled, or python (got {_choice!r})"
    )

kernels = None
if _choice in ("auto", "compiled"):
    try:
        from . import _core as kernels  # type: ignore[no-redef]
    except ImportError:
        if _choice == "compiled":
            raise
if kernels is None:
    from . import _ref as kernels  # type: ignore[no-redef]


def backend_name() -> str:
    return kernels.BACKEND_NAME


def get_kernels(name: str | None = None):
    """Kernel module for an explicit backend name (used by the benchmark)."""
    if name is None or name == backend_name():
        return kernels
    if name == "python":
        from . import _ref
        return _ref
    if name == "compiled":
        from . import _core
        return _core
    raise ValueError(f"unknown backend {name!r}")
