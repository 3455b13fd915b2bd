"""Exact shallow cuttings and approximate k-levels for plane arrangements.

Everything is computed over exact rationals; approximate constructions are
certified by brute-force oracles.
"""

from terracut.scalar import Q
from terracut.geom import Plane, ConvexPolygon
from terracut.planes import PlaneSet

__all__ = ["Q", "Plane", "ConvexPolygon", "PlaneSet"]
