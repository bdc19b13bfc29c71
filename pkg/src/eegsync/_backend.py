"""Kernel backend selection.

The compiled extension is preferred when importable; the numpy kernel is
the fallback. EEGSYNC_BACKEND=cython|numpy|auto forces the choice (the
cython setting raises if the extension is missing). Both backends obey the
same contract, but for bit-identical reruns use the same backend.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _kernel_numpy


def _load(requested: str) -> tuple[ModuleType, str]:
    if requested not in ("auto", "cython", "numpy"):
        raise ValueError(
            f"EEGSYNC_BACKEND must be auto, cython or numpy, got {requested!r}"
        )
    if requested in ("auto", "cython"):
        try:
            from . import _corrkernel

            return _corrkernel, "cython"
        except ImportError:
            if requested == "cython":
                raise ImportError(
                    "EEGSYNC_BACKEND=cython but the compiled kernel is not "
                    "built; reinstall the package or use EEGSYNC_BACKEND=numpy"
                )
    return _kernel_numpy, "numpy"


_kernel, _name = _load(os.environ.get("EEGSYNC_BACKEND", "auto"))


def active_kernel() -> ModuleType:
    return _kernel


def backend_name() -> str:
    return _name


def available_backends() -> tuple[str, ...]:
    try:
        from . import _corrkernel  # noqa: F401

        return ("cython", "numpy")
    except ImportError:
        return ("numpy",)


def kernel_by_name(name: str) -> ModuleType:
    """Load a specific backend (used by the benchmark and parity tests)."""
    if name not in ("cython", "numpy"):
        raise ValueError(f"backend must be cython or numpy, got {name!r}")
    kernel, got = _load(name)
    if got != name:
        raise ImportError(f"backend {name!r} unavailable")
    return kernel
