"""Primitive predicates and convex-polygon machinery.

Points are plain (x, y) tuples of exact rationals; Point3 adds z.  All
predicates decide signs exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Tuple

from terracut.scalar import Q, sign

Point2 = Tuple  # (x, y)
Point3 = Tuple  # (x, y, z)


class DegeneracyError(ValueError):
    """Raised when an input violates the general-position assumptions."""


def orient2d(p: Point2, q: Point2, r: Point2) -> int:
    """Sign of the signed area of triangle (p, q, r)."""
    return sign((q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]))


@dataclass(frozen=True)
class Plane:
    """Non-vertical plane z = a*x + b*y + c."""

    a: object
    b: object
    c: object

    def height(self, p: Point2):
        return self.a * p[0] + self.b * p[1] + self.c


def plane_height(h: Plane, p: Point2):
    return h.a * p[0] + h.b * p[1] + h.c


def side_of_plane(h: Plane, p: Point3) -> int:
    """+1 strictly above, 0 on, -1 strictly below."""
    return sign(p[2] - (h.a * p[0] + h.b * p[1] + h.c))


# ---------------------------------------------------------------------------
# segments and lines


def line_through(p: Point2, q: Point2):
    """Coefficients (A, B, C) of the line A*x + B*y + C = 0 through p, q."""
    a = q[1] - p[1]
    b = p[0] - q[0]
    c = -(a * p[0] + b * p[1])
    return (a, b, c)


def line_side(line, p: Point2) -> int:
    return sign(line[0] * p[0] + line[1] * p[1] + line[2])


def line_intersection(l1, l2) -> Optional[Point2]:
    a1, b1, c1 = l1
    a2, b2, c2 = l2
    det = a1 * b2 - a2 * b1
    if det == 0:
        return None
    x = (b1 * c2 - b2 * c1) / det
    y = (a2 * c1 - a1 * c2) / det
    return (x, y)


def segments_cross(p1, p2, q1, q2) -> bool:
    """Proper crossing: intersection in the open interior of both segments."""
    d1 = orient2d(q1, q2, p1)
    d2 = orient2d(q1, q2, p2)
    d3 = orient2d(p1, p2, q1)
    d4 = orient2d(p1, p2, q2)
    return d1 * d2 < 0 and d3 * d4 < 0


def segment_point(p1, p2, q) -> bool:
    """Is q on the closed segment p1 p2?"""
    if orient2d(p1, p2, q) != 0:
        return False
    return (
        min(p1[0], p2[0]) <= q[0] <= max(p1[0], p2[0])
        and min(p1[1], p2[1]) <= q[1] <= max(p1[1], p2[1])
    )


# ---------------------------------------------------------------------------
# convex polygons


@dataclass(frozen=True)
class ConvexPolygon:
    """Counterclockwise strictly convex polygon.

    ``on_box`` marks edge indices lying on the universe box (the clipped stand-in
    for unboundedness); ``degenerate`` flags a collinear 1- or 2-vertex "hull".
    Edge i runs from vertex i to vertex i+1 (mod len).
    """

    vertices: tuple
    on_box: frozenset = field(default_factory=frozenset)
    degenerate: bool = False

    def __len__(self):
        return len(self.vertices)

    def edges(self):
        vs = self.vertices
        n = len(vs)
        for i in range(n):
            yield vs[i], vs[(i + 1) % n]

    def area2(self):
        """Twice the signed area (positive for CCW)."""
        vs = self.vertices
        n = len(vs)
        total = Q(0)
        for i in range(n):
            x1, y1 = vs[i]
            x2, y2 = vs[(i + 1) % n]
            total += x1 * y2 - x2 * y1
        return total

    def contains(self, p: Point2) -> int:
        """+1 strictly inside, 0 on boundary, -1 outside."""
        vs = self.vertices
        n = len(vs)
        if self.degenerate or n < 3:
            if n == 1:
                return 0 if p == vs[0] else -1
            return 0 if segment_point(vs[0], vs[-1], p) else -1
        best = 1
        for i in range(n):
            o = orient2d(vs[i], vs[(i + 1) % n], p)
            if o < 0:
                return -1
            if o == 0:
                best = 0
        if best == 0:
            # on the boundary line of some edge; confirm it is within the hull
            return 0
        return 1

    def lex_min_index(self) -> int:
        vs = self.vertices
        return min(range(len(vs)), key=lambda i: (vs[i][0], vs[i][1]))

    def lex_max_index(self) -> int:
        vs = self.vertices
        return max(range(len(vs)), key=lambda i: (vs[i][0], vs[i][1]))


def polygon_area2(cycle: Sequence[Point2]):
    total = Q(0)
    n = len(cycle)
    for i in range(n):
        x1, y1 = cycle[i]
        x2, y2 = cycle[(i + 1) % n]
        total += x1 * y2 - x2 * y1
    return total


def convex_hull(points: Iterable[Point2]) -> ConvexPolygon:
    """Andrew's monotone chain over exact points."""
    pts = sorted(set((Q(p[0]), Q(p[1])) for p in points))
    if not pts:
        raise ValueError("convex_hull of empty input")
    if len(pts) == 1:
        return ConvexPolygon(vertices=(pts[0],), degenerate=True)

    def half(points_iter):
        out = []
        for p in points_iter:
            while len(out) >= 2 and orient2d(out[-2], out[-1], p) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(reversed(pts))
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        return ConvexPolygon(vertices=(pts[0], pts[-1]), degenerate=True)
    return ConvexPolygon(vertices=tuple(hull))


def clip_convex(vertices: Sequence[Point2], halfplane) -> tuple:
    """Clip a CCW convex polygon to A*x + B*y + C >= 0 (Sutherland-Hodgman)."""
    a, b, c = halfplane
    out = []
    n = len(vertices)
    for i in range(n):
        p = vertices[i]
        q = vertices[(i + 1) % n]
        sp = sign(a * p[0] + b * p[1] + c)
        sq = sign(a * q[0] + b * q[1] + c)
        if sp >= 0:
            out.append(p)
        if sp * sq < 0:
            t_num = -(a * p[0] + b * p[1] + c)
            t_den = a * (q[0] - p[0]) + b * (q[1] - p[1])
            t = t_num / t_den
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    # drop exact duplicates produced when a vertex lies on the clip line
    dedup = []
    for p in out:
        if not dedup or p != dedup[-1]:
            dedup.append(p)
    if len(dedup) >= 2 and dedup[0] == dedup[-1]:
        dedup.pop()
    return tuple(dedup)


def convex_intersection_area2(P: Sequence[Point2], Qv: Sequence[Point2]):
    """Twice the area of the intersection of two CCW convex polygons."""
    cur = tuple(P)
    n = len(Qv)
    for i in range(n):
        p = Qv[i]
        q = Qv[(i + 1) % n]
        # interior of Q is to the left of p->q
        a = p[1] - q[1]
        b = q[0] - p[0]
        c = -(a * p[0] + b * p[1])
        cur = clip_convex(cur, (a, b, c))
        if len(cur) < 3:
            return Q(0)
    return polygon_area2(cur)


def convex_boundaries_crossings(C: ConvexPolygon, D: ConvexPolygon) -> int:
    """Number of transversal boundary crossings of two convex polygons.

    Raises DegeneracyError when boundaries touch non-transversally (vertex on
    the other boundary, or overlapping collinear edges).
    """
    count = 0
    for p1, p2 in C.edges():
        for q1, q2 in D.edges():
            if segments_cross(p1, p2, q1, q2):
                count += 1
            else:
                for v in (q1, q2):
                    if segment_point(p1, p2, v):
                        raise DegeneracyError(
                            f"vertex {v} of one polygon lies on the other's boundary"
                        )
                for v in (p1, p2):
                    if segment_point(q1, q2, v):
                        raise DegeneracyError(
                            f"vertex {v} of one polygon lies on the other's boundary"
                        )
    return count


def tangent_to_convex_chain(p: Point2, chain: Sequence[Point2], side: str) -> int:
    """Index of the tangency vertex of the tangent from p to a convex chain.

    ``chain`` is an x-monotone convex polyline; ``side`` selects the right or
    left tangent as seen from p.  Tie-break: when p is collinear with a chain
    edge, the endpoint nearer to p wins.  Verified against a linear walk; the
    walk is the implementation (chains here are short), binary search is used
    when the chain is long.
    """
    n = len(chain)
    if n == 0:
        raise ValueError("empty chain")
    # the right tangent keeps every chain vertex on the right of the ray
    # from p through the tangency (clockwise side), and symmetrically left
    want = -1 if side == "right" else 1

    def ok(i: int) -> bool:
        # all neighbours of i lie on the proper side of line p -> chain[i]
        for j in (i - 1, i + 1):
            if 0 <= j < n:
                o = orient2d(p, chain[i], chain[j])
                if o == -want:
                    return False
                if o == 0:
                    # collinear edge: prefer the endpoint nearer to p
                    di = (chain[i][0] - p[0]) ** 2 + (chain[i][1] - p[1]) ** 2
                    dj = (chain[j][0] - p[0]) ** 2 + (chain[j][1] - p[1]) ** 2
                    if dj < di:
                        return False
        return True

    for i in range(n):
        if ok(i):
            # confirm global tangency (guards the "no tangent" error case)
            bad = any(orient2d(p, chain[i], chain[j]) == -want for j in range(n))
            if not bad:
                return i
    raise ValueError("no tangent from point to chain on requested side")


def fan_triangulate(cycle: Sequence[Point2]):
    """Fan triangulation of a convex cycle from its lexicographically smallest
    vertex, skipping degenerate (collinear) corners."""
    n = len(cycle)
    i0 = min(range(n), key=lambda i: (cycle[i][0], cycle[i][1]))
    out = []
    for j in range(1, n - 1):
        a = cycle[i0]
        b = cycle[(i0 + j) % n]
        c = cycle[(i0 + j + 1) % n]
        if orient2d(a, b, c) != 0:
            out.append((a, b, c))
    return out
