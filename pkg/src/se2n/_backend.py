"""Kernel backend selection.

The compiled extension is preferred when importable; otherwise the pure NumPy
twin is used. :func:`set_backend` exists for tests and benchmarks.
"""

from __future__ import annotations

from . import _kernels_py

try:
    from . import _kernels as _native
except ImportError:  # pragma: no cover - depends on build environment
    _native = None

_current = _native if _native is not None else _kernels_py


def available_backends() -> list[str]:
    return ["pure"] + (["native"] if _native is not None else [])


def get_kernels():
    """Module providing the kernel functions (compiled or pure)."""
    return _current


def backend_name() -> str:
    return "native" if _current is _native else "pure"


def set_backend(name: str) -> None:
    """Select 'native', 'pure', or 'auto'."""
    global _current
    if name == "pure":
        _current = _kernels_py
    elif name == "native":
        if _native is None:
            raise RuntimeError("native kernels are not built")
        _current = _native
    elif name == "auto":
        _current = _native if _native is not None else _kernels_py
    else:
        raise ValueError(f"unknown backend {name!r}")
