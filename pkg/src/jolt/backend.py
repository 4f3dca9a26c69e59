"""Kernel backend selection.

The compiled extension (``jolt._kernels``) and the pure-Python module
(``jolt._pure``) expose the same functions with identical semantics.
The compiled one is preferred when importable; set JOLT_BACKEND=pure
or JOLT_BACKEND=compiled to force a choice (forcing ``compiled`` makes
a missing extension an import error instead of a silent fallback).
"""

from __future__ import annotations

import importlib
import os

_requested = os.environ.get("JOLT_BACKEND", "auto").lower()

if _requested in ("", "auto", "compiled"):
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]
        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise
        from . import _pure as kernels
        BACKEND = "pure"
elif _requested == "pure":
    from . import _pure as kernels
    BACKEND = "pure"
else:
    raise RuntimeError(f"unknown JOLT_BACKEND value: {_requested!r}")


def load_backend(name):
    """Import a specific backend module by name ('pure' or 'compiled').

    Used by cross-backend tests and the benchmark's comparison mode;
    raises ImportError when the compiled extension is unavailable.
    """
    if name == "pure":
        return importlib.import_module("jolt._pure")
    if name == "compiled":
        return importlib.import_module("jolt._kernels")
    raise ValueError(f"unknown backend name: {name!r}")


def available_backends():
    """Names of importable backends, compiled first when present."""
    names = []
    try:
        importlib.import_module("jolt._kernels")
        names.append("compiled")
    except ImportError:
        pass
    names.append("pure")
    return names
