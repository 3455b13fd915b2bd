"""Backend selection for the arrangement sweep kernels.

The compiled Cython kernel is used when it imported cleanly and the plane
coefficients are small enough for its fixed-width fast path; otherwise the
pure-Python kernel runs.  Set TERRACUT_PURE=1 to force the pure backend.
"""

from __future__ import annotations

import os

from terracut.kernels import _pure
from terracut.kernels._pure import KernelDegeneracyError

_speed = None
if os.environ.get("TERRACUT_PURE") != "1":
    try:
        import importlib

        _speed = importlib.import_module("terracut.kernels._speed")
    except ImportError:
        _speed = None

# the compiled sweep stores event parameters as degree-4 coefficient products
# in int64 and compares them in __int128; |coefficient| <= 20000 keeps both
# within range.  Larger inputs fall back to the pure kernel per call.
SPEED_COEF_LIMIT = 20000


def backend_name() -> str:
    return "compiled" if _speed is not None else "pure"


def _fits_speed(planes) -> bool:
    if _speed is None:
        return False
    limit = SPEED_COEF_LIMIT
    return all(
        -limit <= a <= limit
        and -limit <= b <= limit
        and -limit <= c <= limit
        and 0 < d <= limit
        for a, b, c, d in planes
    )


def histogram(planes):
    if _fits_speed(planes):
        return _speed.histogram(planes)
    return _pure.histogram(planes)


def level_edges(planes, k):
    if _fits_speed(planes):
        return _speed.level_edges(planes, k)
    return _pure.level_edges(planes, k)


def low_vertex_events(planes, kmax):
    if _fits_speed(planes):
        return _speed.low_vertex_events(planes, kmax)
    return _pure.low_vertex_events(planes, kmax)
