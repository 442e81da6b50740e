"""Simplex kernel backend selection.

The compiled extension is preferred when it imported cleanly; the numpy
fallback is always available.  ``SPLITBRANCH_BACKEND=python|cython`` forces a
choice at import time, :func:`set_backend` switches at runtime (used by the
backend benchmark and the parity tests).
"""

import os

from . import pykern

_backends = {"python": pykern}
try:
    from . import cykern

    _backends["cython"] = cykern
except ImportError:
    cykern = None

_forced = os.environ.get("SPLITBRANCH_BACKEND")
if _forced:
    if _forced not in _backends:
        raise ImportError(
            f"SPLITBRANCH_BACKEND={_forced!r} unavailable; "
            f"built backends: {sorted(_backends)}"
        )
    _active = _backends[_forced]
else:
    _active = _backends.get("cython", pykern)


def available_backends() -> list[str]:
    return sorted(_backends)


def set_backend(name: str):
    global _active
    if name not in _backends:
        raise ValueError(f"unknown backend {name!r}; built: {sorted(_backends)}")
    _active = _backends[name]


def get_backend():
    return _active


def backend_name() -> str:
    return _active.BACKEND
