"""Kernel backend selection: compiled extension with pure-Python fallback.

The compiled core is preferred when importable; set OPTBENCH_KERNELS to
``compiled`` or ``fallback`` to force a backend at import time, or call
:func:`use` at runtime (the benchmark suite does this to compare both).
"""

from __future__ import annotations

import os

from . import fallback

try:
    from . import _core
except ImportError:
    _core = None

_BACKENDS = {"fallback": fallback}
if _core is not None:
    _BACKENDS["compiled"] = _core

_forced = os.environ.get("OPTBENCH_KERNELS", "").strip().lower()
if _forced and _forced not in ("auto",):
    if _forced not in _BACKENDS:
        raise ImportError(
            f"OPTBENCH_KERNELS={_forced!r} requested but that backend is "
            f"not available (have: {sorted(_BACKENDS)})"
        )
    _active = _BACKENDS[_forced]
else:
    _active = _BACKENDS.get("compiled", fallback)


def active():
    """The backend module currently in use."""
    return _active


def active_name() -> str:
    return _active.BACKEND


def available() -> list[str]:
    return sorted(_BACKENDS)


def get(name: str):
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown kernel backend {name!r}; have {sorted(_BACKENDS)}")


def use(name: str):
    """Switch the active backend; returns the previously active module."""
    global _active
    prev = _active
    _active = _BACKENDS.get("compiled", fallback) if name == "auto" else get(name)
    return prev
