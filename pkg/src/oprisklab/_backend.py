"""Kernel backend selection.

The compiled Cython kernel is used when its extension module importable;
otherwise the pure NumPy fallback takes over with identical semantics.
Setting the environment variable ``OPRISKLAB_PURE_PYTHON=1`` forces the
fallback (useful for benchmarking and debugging).
"""

from __future__ import annotations

import os

if os.environ.get("OPRISKLAB_PURE_PYTHON", "").strip() not in ("", "0"):
    from . import _kernels_py as kernels

    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:  # pragma: no cover - depends on build environment
        from . import _kernels_py as kernels  # type: ignore[no-redef]

        BACKEND = "python"


def active_backend() -> str:
    """Name of the kernel backend in use: ``"compiled"`` or ``"python"``."""
    return BACKEND
