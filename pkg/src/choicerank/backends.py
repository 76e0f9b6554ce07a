"""Kernel backend selection.

The hot loops (edge-scatter passes and trajectory sampling) exist twice:
a compiled Cython extension (``choicerank._core``) and a pure-numpy
fallback (``choicerank._pure``). The compiled core is preferred when it
imported successfully; set ``CHOICERANK_BACKEND=python`` or ``cython`` to
force one, or call :func:`use_backend` at runtime.
"""

from __future__ import annotations

import os

from . import _pure

try:
    from . import _core
except ImportError:
    _core = None

_BACKENDS = {"python": _pure, "cython": _core}

_active: str


def available_backends() -> list[str]:
    return [name for name, mod in _BACKENDS.items() if mod is not None]


def use_backend(name: str = "auto") -> str:
    """Select the kernel backend; returns the name actually in effect."""
    global _active
    if name == "auto":
        name = "cython" if _core is not None else "python"
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; choose from "
                         f"{sorted(_BACKENDS)} or 'auto'")
    if _BACKENDS[name] is None:
        raise ImportError(
            "the compiled choicerank._core extension is not available; "
            "reinstall with a C compiler or use the 'python' backend")
    _active = name
    return _active


def backend_name() -> str:
    return _active


def impl():
    """The active kernel module."""
    return _BACKENDS[_active]


use_backend(os.environ.get("CHOICERANK_BACKEND", "auto"))
