"""Kernel backend selection.

Two interchangeable kernel sets exist: numba-jitted loops and a pure-numpy
fallback. The active one is chosen at first use from the L0DAG_BACKEND
environment variable ("auto", "numba" or "numpy"; default "auto" prefers
numba when it imports) and can be switched explicitly with
:func:`use_backend`.
"""

from __future__ import annotations

import os

_VALID = ("auto", "numba", "numpy")
_active_name: str | None = None
_active_module = None


def _import_numba_kernels():
    from . import _kernels_numba

    return _kernels_numba


def _import_numpy_kernels():
    from . import _kernels_numpy

    return _kernels_numpy


def use_backend(name: str):
    """Force a backend; returns the kernel module. Name: auto|numba|numpy."""
    global _active_name, _active_module
    if name not in _VALID:
        raise ValueError(f"unknown backend {name!r}; expected one of {_VALID}")
    if name == "numpy":
        mod = _import_numpy_kernels()
        resolved = "numpy"
    elif name == "numba":
        mod = _import_numba_kernels()
        resolved = "numba"
    else:
        try:
            mod = _import_numba_kernels()
            resolved = "numba"
        except ImportError:
            mod = _import_numpy_kernels()
            resolved = "numpy"
    _active_name = resolved
    _active_module = mod
    return mod


def kernels():
    """The active kernel module, resolving L0DAG_BACKEND on first use."""
    if _active_module is None:
        use_backend(os.environ.get("L0DAG_BACKEND", "auto"))
    return _active_module


def active_backend() -> str:
    """Name of the backend in use ("numba" or "numpy")."""
    kernels()
    return _active_name
