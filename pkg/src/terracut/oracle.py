"""Brute-force ground truth for levels, crossings, and exact k-level terrains.

The k-level is assembled from the sweep kernels' breakline intervals: on the
projected equal-height line of a plane pair, the (k+1)-st lowest plane has a
crease exactly where the pair's below-count is k-1 or k.  The resulting
segments, clipped to the universe box, subdivide the box into the level's
convex faces.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cmp_to_key
from typing import Dict, List, Optional, Sequence, Tuple

from terracut import kernels
from terracut.geom import (
    DegeneracyError,
    Plane,
    Point2,
    Point3,
    fan_triangulate,
    orient2d,
    plane_height,
    polygon_area2,
    side_of_plane,
)
from terracut.kernels import KernelDegeneracyError
from terracut.planes import PlaneSet
from terracut.scalar import Q, sign


def level_of_point(H: PlaneSet, p: Point3) -> int:
    """Number of planes strictly below p."""
    x, y, z = p
    return sum(1 for h in H.planes if h.a * x + h.b * y + h.c < z)


def heights_at(H: PlaneSet, p: Point2):
    x, y = p[0], p[1]
    return [h.a * x + h.b * y + h.c for h in H.planes]


def lift_to_level(H: PlaneSet, k: int, p: Point2) -> Point3:
    """Point (p, z) with z the (k+1)-st smallest plane height over p."""
    if not 0 <= k <= H.n - 1:
        raise ValueError(f"level {k} out of range for {H.n} planes")
    hs = heights_at(H, p)
    hs.sort()
    return (Q(p[0]), Q(p[1]), hs[k])


def kth_plane_at(H: PlaneSet, k: int, p: Point2) -> int:
    """Index of the plane attaining the (k+1)-st smallest height over p."""
    hs = heights_at(H, p)
    order = sorted(range(H.n), key=lambda i: hs[i])
    idx = order[k]
    if (k > 0 and hs[order[k - 1]] == hs[idx]) or (
        k + 1 < H.n and hs[order[k + 1]] == hs[idx]
    ):
        raise DegeneracyError(f"height tie at {p} around rank {k}")
    return idx


def crossing_number(H: PlaneSet, p: Point3, q: Point3) -> int:
    """Planes meeting the closed segment pq (touching counts)."""
    count = 0
    for h in H.planes:
        sp = side_of_plane(h, p)
        sq = side_of_plane(h, q)
        if not (sp > 0 and sq > 0) and not (sp < 0 and sq < 0):
            count += 1
    return count


def triangle_crossing_number(H: PlaneSet, tri: Sequence[Point3]) -> int:
    """Planes meeting the closed triangle (not all vertices strictly one side)."""
    a, b, c = tri
    count = 0
    for h in H.planes:
        s1 = side_of_plane(h, a)
        s2 = side_of_plane(h, b)
        s3 = side_of_plane(h, c)
        if not (s1 > 0 and s2 > 0 and s3 > 0) and not (
            s1 < 0 and s2 < 0 and s3 < 0
        ):
            count += 1
    return count


# ---------------------------------------------------------------------------
# terrains


@dataclass
class Terrain:
    """Triangulated xy-monotone surface clipped to the box [-M, M]^2."""

    vertices: List[Point3]
    triangles: List[Tuple[int, int, int]]
    supporting_plane: List[Optional[int]]  # per triangle, exact levels only
    faces: List[List[int]]  # untriangulated face cycles (vertex indices)
    face_plane: List[Optional[int]]
    M: object  # box half-width
    level: Optional[int] = None  # the level this terrain was built from

    _tri_planes: Optional[List[Plane]] = field(default=None, repr=False)

    def vertex_on_box(self, vi: int) -> bool:
        x, y, _ = self.vertices[vi]
        return x == self.M or x == -self.M or y == self.M or y == -self.M

    def interior_vertex_count(self) -> int:
        return sum(
            1 for vi in range(len(self.vertices)) if not self.vertex_on_box(vi)
        )

    def triangle_plane(self, ti: int) -> Plane:
        """Affine function whose graph contains triangle ti."""
        if self._tri_planes is None:
            self._tri_planes = [None] * len(self.triangles)
        if self._tri_planes[ti] is None:
            i, j, k = self.triangles[ti]
            self._tri_planes[ti] = plane_from_points3(
                self.vertices[i], self.vertices[j], self.vertices[k]
            )
        return self._tri_planes[ti]

    def locate(self, p: Point2) -> Optional[int]:
        """Linear-scan point location: a triangle whose closed projection
        contains p, or None outside the box."""
        for ti, (i, j, k) in enumerate(self.triangles):
            a = self.vertices[i]
            b = self.vertices[j]
            c = self.vertices[k]
            if (
                orient2d(a, b, p) >= 0
                and orient2d(b, c, p) >= 0
                and orient2d(c, a, p) >= 0
            ):
                return ti
        return None

    def height_at(self, p: Point2):
        ti = self.locate(p)
        if ti is None:
            raise ValueError(f"point {p} outside the terrain's box")
        return plane_height(self.triangle_plane(ti), p)


def plane_from_points3(a: Point3, b: Point3, c: Point3) -> Plane:
    """The non-vertical plane through three points (positive projected area)."""
    det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    if det == 0:
        raise ValueError("degenerate triangle (collinear projection)")
    ca = (
        (b[2] - a[2]) * (c[1] - a[1]) - (c[2] - a[2]) * (b[1] - a[1])
    ) / det
    cb = (
        (b[0] - a[0]) * (c[2] - a[2]) - (c[0] - a[0]) * (b[2] - a[2])
    ) / det
    cc = a[2] - ca * a[0] - cb * a[1]
    return Plane(ca, cb, cc)


def _dir_cmp(d1, d2) -> int:
    """Counterclockwise angular order of nonzero direction vectors, starting
    from the positive x-axis."""

    def half(d):
        return 0 if (d[1] > 0 or (d[1] == 0 and d[0] > 0)) else 1

    h1, h2 = half(d1), half(d2)
    if h1 != h2:
        return -1 if h1 < h2 else 1
    cr = d1[0] * d2[1] - d1[1] * d2[0]
    if cr > 0:
        return -1
    if cr < 0:
        return 1
    return 0


def _assemble_subdivision(segments, M):
    """Planar subdivision of the box from exact non-crossing segments.

    segments: list of ((p1, p2), tag).  Box edges are added automatically.
    Returns (points, face_cycles, face_tags) where each face cycle is CCW and
    face_tags[f] is the tag of one of its non-box edges (None if none).
    """
    vid: Dict[tuple, int] = {}
    points: List[tuple] = []

    def vertex(p):
        key = (p[0], p[1])
        i = vid.get(key)
        if i is None:
            i = len(points)
            vid[key] = i
            points.append(key)
        return i

    edges = []  # (u, v, tag)
    on_side = {0: [], 1: [], 2: [], 3: []}  # box sides: x=-M, y=M?? see below

    for (p1, p2), tag in segments:
        u, v = vertex(p1), vertex(p2)
        if u == v:
            continue
        edges.append((u, v, tag))

    for c in ((-M, -M), (M, -M), (M, M), (-M, M)):
        vertex(c)

    # box boundary points, grouped per side and chained
    for i, (x, y) in enumerate(points):
        if y == -M:
            on_side[0].append(i)
        if x == M:
            on_side[1].append(i)
        if y == M:
            on_side[2].append(i)
        if x == -M:
            on_side[3].append(i)
    keys = {
        0: lambda i: points[i][0],
        1: lambda i: points[i][1],
        2: lambda i: -points[i][0],
        3: lambda i: -points[i][1],
    }
    for s in range(4):
        chain = sorted(set(on_side[s]), key=keys[s])
        for u, v in zip(chain, chain[1:]):
            edges.append((u, v, None))

    # half-edge angular structure
    out: Dict[int, list] = {}
    for ei, (u, v, tag) in enumerate(edges):
        pu, pv = points[u], points[v]
        d_uv = (pv[0] - pu[0], pv[1] - pu[1])
        d_vu = (-d_uv[0], -d_uv[1])
        out.setdefault(u, []).append([d_uv, v, ei])
        out.setdefault(v, []).append([d_vu, u, ei])

    for u, lst in out.items():
        lst.sort(key=cmp_to_key(lambda a, b: _dir_cmp(a[0], b[0])))
        for a, b in zip(lst, lst[1:]):
            if _dir_cmp(a[0], b[0]) == 0:
                raise DegeneracyError(
                    f"overlapping edges at vertex {points[u]}"
                )

    # next half-edge: arriving u->v, leave along the clockwise-next direction
    # from (v->u), which keeps the face on the left
    index_at = {}
    for u, lst in out.items():
        for pos, item in enumerate(lst):
            index_at[(u, item[1], item[2])] = pos

    visited = set()
    cycles = []
    tags = []
    for u0, lst in out.items():
        for item in lst:
            start = (u0, item[1], item[2])
            if start in visited:
                continue
            cyc = []
            tag_found = None
            cur = start
            while True:
                visited.add(cur)
                u, v, ei = cur
                cyc.append(u)
                if edges[ei][2] is not None and tag_found is None:
                    tag_found = (edges[ei][2], u, v)
                pos = index_at[(v, u, ei)]
                lst_v = out[v]
                nxt = lst_v[(pos - 1) % len(lst_v)]
                cur = (v, nxt[1], nxt[2])
                if cur == start:
                    break
            cycles.append(cyc)
            tags.append(tag_found)

    faces = []
    face_tags = []
    outer_seen = 0
    for cyc, tag in zip(cycles, tags):
        area2 = polygon_area2([points[i] for i in cyc])
        if area2 > 0:
            faces.append(cyc)
            face_tags.append(tag)
        elif area2 < 0:
            outer_seen += 1
        else:
            raise DegeneracyError("zero-area face cycle in subdivision")
    if outer_seen != 1:
        raise DegeneracyError(
            f"subdivision has {outer_seen} outer cycles (expected 1)"
        )
    return points, faces, face_tags


def exact_k_level(H: PlaneSet, k: int, desk_bound: int = 400) -> Terrain:
    """Exact L_k as a triangulated terrain clipped to the universe box."""
    if not 0 <= k <= H.n - 1:
        raise ValueError(f"level {k} out of range for {H.n} planes")
    if H.n > desk_bound:
        raise ValueError(f"n={H.n} exceeds the desk bound {desk_bound}")
    try:
        raw = kernels.level_edges(H.int_coeffs, k)
    except KernelDegeneracyError as e:
        raise DegeneracyError(str(e)) from e
    M = H.box_size()

    segments = []
    for (i, j, jval, x0n, y0n, den, dx, dy, lo, hi) in raw:
        x0 = Q(x0n, den)
        y0 = Q(y0n, den)
        # parameter range of the box [-M, M]^2 along p0 + t*(dx, dy)
        tmin, tmax = None, None
        ok = True
        for d, p0 in ((dx, x0), (dy, y0)):
            if d == 0:
                if not (-M <= p0 <= M):
                    ok = False
                    break
                continue
            t1 = (-M - p0) / d
            t2 = (M - p0) / d
            if t1 > t2:
                t1, t2 = t2, t1
            tmin = t1 if tmin is None or t1 > tmin else tmin
            tmax = t2 if tmax is None or t2 < tmax else tmax
        if not ok or tmin is None or tmin >= tmax:
            continue
        t_lo = Q(lo[0], lo[1]) if lo is not None else tmin
        t_hi = Q(hi[0], hi[1]) if hi is not None else tmax
        if lo is None and t_lo < tmin:
            t_lo = tmin
        if hi is None and t_hi > tmax:
            t_hi = tmax
        if t_lo >= t_hi:
            continue
        p1 = (x0 + t_lo * dx, y0 + t_lo * dy)
        p2 = (x0 + t_hi * dx, y0 + t_hi * dy)
        segments.append(((p1, p2), (i, j, jval)))

    points, faces, face_tags = _assemble_subdivision(segments, M)

    face_plane = []
    for cyc, tag in zip(faces, face_tags):
        if tag is None:
            # face bounded by box edges only: query the oracle inside
            cx = sum(points[i][0] for i in cyc) / len(cyc)
            cy = sum(points[i][1] for i in cyc) / len(cyc)
            face_plane.append(kth_plane_at(H, k, (cx, cy)))
            continue
        (i, j, jval), u, v = tag
        pu, pv = points[u], points[v]
        d = (pv[0] - pu[0], pv[1] - pu[1])
        hi_, hj_ = H.planes[i], H.planes[j]
        # sign of (h_i - h_j) on the left side of u->v
        s = sign((hi_.a - hj_.a) * (-d[1]) + (hi_.b - hj_.b) * d[0])
        if s == 0:
            raise DegeneracyError("breakline with vanishing height gradient")
        if jval == k:
            # pair occupies ranks k+1, k+2: the level follows the lower plane
            plane_idx = i if s < 0 else j
        else:
            # jval == k-1: ranks k, k+1: the level follows the upper plane
            plane_idx = i if s > 0 else j
        face_plane.append(plane_idx)

    # vertex heights from an incident face's plane (consistent by continuity)
    zs: List[Optional[object]] = [None] * len(points)
    for cyc, pi in zip(faces, face_plane):
        h = H.planes[pi]
        for vi in cyc:
            if zs[vi] is None:
                zs[vi] = plane_height(h, points[vi])
    vertices = [
        (x, y, z if z is not None else lift_to_level(H, k, (x, y))[2])
        for (x, y), z in zip(points, zs)
    ]

    triangles = []
    tri_plane = []
    for cyc, pi in zip(faces, face_plane):
        n = len(cyc)
        i0 = min(range(n), key=lambda t: (points[cyc[t]][0], points[cyc[t]][1]))
        for t in range(1, n - 1):
            a = cyc[i0]
            b = cyc[(i0 + t) % n]
            c = cyc[(i0 + t + 1) % n]
            if orient2d(points[a], points[b], points[c]) != 0:
                triangles.append((a, b, c))
                tri_plane.append(pi)

    return Terrain(
        vertices=vertices,
        triangles=triangles,
        supporting_plane=tri_plane,
        faces=faces,
        face_plane=face_plane,
        M=M,
        level=k,
    )


def cached_level(H: PlaneSet, k: int, desk_bound: int = 400) -> Terrain:
    t = H._level_cache.get(k)
    if t is None:
        t = exact_k_level(H, k, desk_bound=desk_bound)
        H._level_cache[k] = t
    return t


def k_level_complexity(H: PlaneSet, k: int) -> int:
    """Vertex count of the untriangulated L_k (histogram-based)."""
    if not 0 <= k <= H.n - 1:
        raise ValueError(f"level {k} out of range for {H.n} planes")
    return H.level_complexity(k)


def low_vertices(H: PlaneSet, kmax: int):
    """All arrangement vertices with level <= kmax, as (Point3, level)."""
    try:
        raw = kernels.low_vertex_events(H.int_coeffs, kmax)
    except KernelDegeneracyError as e:
        raise DegeneracyError(str(e)) from e
    out = []
    for (i, j, g, x0n, y0n, den, dx, dy, tn, td, lvl) in raw:
        t = Q(tn, td)
        x = Q(x0n, den) + t * dx
        y = Q(y0n, den) + t * dy
        z = plane_height(H.planes[i], (x, y))
        out.append(((x, y, z), lvl))
    return out


def verify_terrain(T: Terrain, pairwise: bool = False) -> dict:
    """Monotonicity certificate: projected triangles are CCW, their areas sum
    exactly to the box area, and (optionally) they are pairwise openly
    disjoint."""
    from terracut.geom import convex_intersection_area2

    report = {"ok": True, "errors": []}
    total = Q(0)
    tris2 = []
    for ti, (i, j, k) in enumerate(T.triangles):
        a, b, c = T.vertices[i], T.vertices[j], T.vertices[k]
        ar2 = polygon_area2([a[:2], b[:2], c[:2]])
        if ar2 <= 0:
            report["ok"] = False
            report["errors"].append(f"triangle {ti} not CCW/positive")
        total += ar2
        tris2.append((a[:2], b[:2], c[:2]))
    if total != (2 * T.M) ** 2 * 2:
        report["ok"] = False
        report["errors"].append(
            f"projected area sum {total} != box area {(2 * T.M) ** 2 * 2} (doubled)"
        )
    if pairwise:
        for i in range(len(tris2)):
            for j in range(i + 1, len(tris2)):
                if convex_intersection_area2(tris2[i], tris2[j]) > 0:
                    report["ok"] = False
                    report["errors"].append(f"triangles {i},{j} overlap")
    return report
