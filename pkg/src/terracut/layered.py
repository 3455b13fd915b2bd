"""Layered (1/r)-cuttings of the whole arrangement by vertical prisms.

A random sequence of level indices is drawn from prescribed intervals.  The
cutting stacks slabs bounded by terrains that approximate those levels: a
semi-unbounded bottom stack below the lowest terrain, bounded slabs between
consecutive terrains, and a top stack above the highest.  Consecutive slabs
share their boundary terrain, so the prisms tile space exactly and every
generic point is covered exactly once (points on a shared terrain twice).
Within a slab the two bounding terrains are overlaid in projection; each
overlay cell is planar on both, so the cell's fan triangles bound honest
prisms with planar tops and bottoms.

The textbook construction (independent overlapping layers, each lifted from
a single overlay of the two exact level maps) is kept as the separately
tested operations ``overlay_levels`` and ``build_layer``.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from terracut.division import kappa_division, terrain_to_graph
from terracut.geom import (
    DegeneracyError,
    Plane,
    Point2,
    Point3,
    line_intersection,
    line_through,
    orient2d,
    plane_height,
    polygon_area2,
    segment_point,
    segments_cross,
)
from terracut.levelapprox import _approx_terrain
from terracut.oracle import (
    Terrain,
    _assemble_subdivision,
    cached_level,
    k_level_complexity,
    level_of_point,
    lift_to_level,
)
from terracut.planes import PlaneSet
from terracut.scalar import Q, sign

__all__ = [
    "BoundedPrism",
    "LayeredCutting",
    "LevelSequence",
    "OverlayTriangulation",
    "Slab",
    "build_layer",
    "build_layered_cutting",
    "overlay_levels",
    "sample_level_sequence",
    "verify_layered",
]


# ---------------------------------------------------------------------------
# level sequence


def minus_interval(n: int, r: int, i: int) -> Tuple[int, int]:
    """Integer interval [(i-3/2)n/r + 1, (i-5/4)n/r], rounded inward."""
    g = Q(n, r)
    lo = math.ceil((i - Q(3, 2)) * g + 1)
    hi = math.floor((i - Q(5, 4)) * g)
    if lo > hi:
        raise ValueError(f"empty level interval I-[{i}] for n={n}, r={r}")
    return int(lo), int(hi)


def plus_interval(n: int, r: int, i: int) -> Tuple[int, int]:
    """Integer interval [i*n/r + 1, (i+1/4)n/r], rounded inward."""
    g = Q(n, r)
    lo = math.ceil(i * g + 1)
    hi = math.floor((i + Q(1, 4)) * g)
    if lo > hi:
        raise ValueError(f"empty level interval I+[{i}] for n={n}, r={r}")
    return int(lo), int(hi)


@dataclass(frozen=True)
class LevelSequence:
    """Random level indices k_minus[i] (i=2..r) and k_plus[i] (i=1..r-1).

    Index 0 and the out-of-range entries are None; the first minus interval
    lies below level 0 and the last plus interval above n-1, so those draws
    do not exist (the bottom and top stacks take their place)."""

    n: int
    r: int
    seed: int
    k_minus: tuple
    k_plus: tuple

    def values(self) -> List[int]:
        """All drawn levels, sorted."""
        vs = [v for v in self.k_minus if v is not None]
        vs += [v for v in self.k_plus if v is not None]
        return sorted(vs)


def sample_level_sequence(n: int, r: int, seed: int) -> LevelSequence:
    """Draw each level uniformly from its interval (deterministic per seed)."""
    rng = random.Random(f"levels:{seed}")
    km: List[Optional[int]] = [None] * (r + 1)
    kp: List[Optional[int]] = [None] * (r + 1)
    for i in range(2, r + 1):
        lo, hi = minus_interval(n, r, i)
        km[i] = rng.randint(lo, hi)
    for i in range(1, r):
        lo, hi = plus_interval(n, r, i)
        kp[i] = rng.randint(lo, hi)
    for v in km[2:] + kp[1:r]:
        if v is not None and not 1 <= v <= n - 1:
            raise ValueError(f"drawn level {v} out of range for n={n}")
    return LevelSequence(n=n, r=r, seed=seed, k_minus=tuple(km), k_plus=tuple(kp))


# ---------------------------------------------------------------------------
# overlay of two triangulations


def _triangulation_segments(T: Terrain):
    """Projected triangle edges as 2D segments, box-boundary edges omitted
    (the subdivision assembler supplies the box)."""
    M = T.M
    seen = set()
    segs = []
    for (i, j, k) in T.triangles:
        for u, v in ((i, j), (j, k), (k, i)):
            key = (u, v) if u < v else (v, u)
            if key in seen:
                continue
            seen.add(key)
            p = T.vertices[u]
            q = T.vertices[v]
            p2 = (p[0], p[1])
            q2 = (q[0], q[1])
            if (p2[0] == q2[0] and abs(p2[0]) == M) or (
                p2[1] == q2[1] and abs(p2[1]) == M
            ):
                continue
            segs.append((p2, q2))
    return segs


def _normalize_family(segs):
    """Rewrite a segment family as non-overlapping atomic subsegments.

    Triangulations assembled piecewise (division hulls, caps) contain
    T-junctions: collinear edges that overlap partially.  Segments are
    grouped by canonical supporting line and each group's overlapping
    intervals are split at every endpoint, keeping covered atoms once."""
    groups: Dict[tuple, list] = {}
    for p, q in segs:
        a, b, c = line_through(p, q)
        if a != 0:
            key = (1, b / a, c / a)
            u_p, u_q = p[1], q[1]  # x is a function of y on this line
        else:
            key = (0, 1, c / b)
            u_p, u_q = p[0], q[0]
        groups.setdefault(key, []).append((u_p, p, u_q, q))
    out = []
    for group in groups.values():
        if len(group) == 1:
            u_p, p, u_q, q = group[0]
            out.append((p, q))
            continue
        coords = {}
        events = []
        for u_p, p, u_q, q in group:
            coords[u_p] = p
            coords[u_q] = q
            lo, hi = (u_p, u_q) if u_p <= u_q else (u_q, u_p)
            events.append((lo, hi))
        cuts = sorted(coords)
        depth_at = []
        for a0, b0 in zip(cuts, cuts[1:]):
            mid_covered = any(lo <= a0 and b0 <= hi for lo, hi in events)
            depth_at.append(mid_covered)
        for (a0, b0), covered in zip(zip(cuts, cuts[1:]), depth_at):
            if covered:
                out.append((coords[a0], coords[b0]))
    return out


def _orient_f(ax, ay, bx, by, cx, cy):
    """Float orientation value together with a magnitude scale for the
    rounding-error margin."""
    t1 = (bx - ax) * (cy - ay)
    t2 = (by - ay) * (cx - ax)
    return t1 - t2, abs(t1) + abs(t2)


_F_EPS = 1e-9


def _quantile_cuts(values, nbins: int) -> List[float]:
    """Bin boundaries at the value quantiles, deduplicated.

    The universe box is far larger than the region the input geometry
    concentrates in, so uniform grids put everything in one cell; quantile
    cuts adapt to the data."""
    vals = sorted(values)
    n = len(vals)
    out: List[float] = []
    for i in range(1, nbins):
        v = vals[(i * n) // nbins]
        if not out or v > out[-1]:
            out.append(v)
    return out


def _find_crossings(segs_a, segs_b, M, nbins: Optional[int] = None):
    """Proper crossings between the two segment families.

    Float arithmetic over a bounding-box grid filters the candidate pairs;
    any near-degenerate pair is re-decided exactly, and non-transversal
    contact (endpoint on the other segment's interior) raises
    DegeneracyError.  Returns per-family lists of (segment index, exact
    crossing point)."""
    from bisect import bisect_right

    if nbins is None:
        nbins = min(256, max(8, int(max(len(segs_a), len(segs_b)) ** 0.5)))
    fa = [
        (float(p[0]), float(p[1]), float(q[0]), float(q[1])) for p, q in segs_a
    ]
    fb = [
        (float(p[0]), float(p[1]), float(q[0]), float(q[1])) for p, q in segs_b
    ]
    xcuts = _quantile_cuts(
        [s[0] for s in fa + fb] + [s[2] for s in fa + fb], nbins
    )
    ycuts = _quantile_cuts(
        [s[1] for s in fa + fb] + [s[3] for s in fa + fb], nbins
    )
    nby = len(ycuts) + 1
    inf = float("inf")

    def seg_cells(px, py, qx, qy):
        """Grid cells a segment passes through: per x-column, the y-range
        the segment spans there (diagonal segments then skip most of their
        bounding box)."""
        if px > qx:
            px, py, qx, qy = qx, qy, px, py
        b0 = bisect_right(xcuts, px)
        b1 = bisect_right(xcuts, qx)
        if b0 == b1 or qx == px:
            y0, y1 = (py, qy) if py <= qy else (qy, py)
            for bx in range(b0, b1 + 1):
                for by in range(bisect_right(ycuts, y0), bisect_right(ycuts, y1) + 1):
                    yield bx * nby + by
            return
        slope = (qy - py) / (qx - px)
        for bx in range(b0, b1 + 1):
            xl = max(px, xcuts[bx - 1] if bx > 0 else -inf)
            xr = min(qx, xcuts[bx] if bx < len(xcuts) else inf)
            ya = py + slope * (xl - px)
            yb = py + slope * (xr - px)
            y0, y1 = (ya, yb) if ya <= yb else (yb, ya)
            pad0 = 1e-9 * (abs(y0) + 1.0)
            pad1 = 1e-9 * (abs(y1) + 1.0)
            for by in range(
                bisect_right(ycuts, y0 - pad0),
                bisect_right(ycuts, y1 + pad1) + 1,
            ):
                yield bx * nby + by

    bins: List[List[int]] = [[] for _ in range((len(xcuts) + 1) * nby)]
    for idx, (px, py, qx, qy) in enumerate(fb):
        for cell in seg_cells(px, py, qx, qy):
            bins[cell].append(idx)

    eps = _F_EPS
    hits_a: Dict[int, list] = {}
    hits_b: Dict[int, list] = {}
    for ia, (px, py, qx, qy) in enumerate(fa):
        x0, x1 = (px, qx) if px <= qx else (qx, px)
        y0, y1 = (py, qy) if py <= qy else (qy, py)
        seen = set()
        for cell in seg_cells(px, py, qx, qy):
            for ib in bins[cell]:
                if ib in seen:
                    continue
                seen.add(ib)
                ax_, ay_, bx_, by_ = fb[ib]
                if min(ax_, bx_) > x1 or max(ax_, bx_) < x0:
                    continue
                if min(ay_, by_) > y1 or max(ay_, by_) < y0:
                    continue
                t1 = (qx - px) * (ay_ - py)
                t2 = (qy - py) * (ax_ - px)
                d1 = t1 - t2
                s1 = eps * (abs(t1) + abs(t2))
                t1 = (qx - px) * (by_ - py)
                t2 = (qy - py) * (bx_ - px)
                d2 = t1 - t2
                s2 = eps * (abs(t1) + abs(t2))
                if (d1 > s1 and d2 > s2) or (d1 < -s1 and d2 < -s2):
                    continue
                t1 = (bx_ - ax_) * (py - ay_)
                t2 = (by_ - ay_) * (px - ax_)
                d3 = t1 - t2
                s3 = eps * (abs(t1) + abs(t2))
                t1 = (bx_ - ax_) * (qy - ay_)
                t2 = (by_ - ay_) * (qx - ax_)
                d4 = t1 - t2
                s4 = eps * (abs(t1) + abs(t2))
                if (d3 > s3 and d4 > s4) or (d3 < -s3 and d4 < -s4):
                    continue
                clear = (
                    abs(d1) > s1
                    and abs(d2) > s2
                    and abs(d3) > s3
                    and abs(d4) > s4
                )
                p, q = segs_a[ia]
                u, v = segs_b[ib]
                if clear:
                    crossing = True
                else:
                    crossing = segments_cross(p, q, u, v)
                    if not crossing:
                        for w in (u, v):
                            if segment_point(p, q, w) and w not in (p, q):
                                raise DegeneracyError(
                                    f"overlay vertex {w} on a foreign edge"
                                )
                        for w in (p, q):
                            if segment_point(u, v, w) and w not in (u, v):
                                raise DegeneracyError(
                                    f"overlay vertex {w} on a foreign edge"
                                )
                        continue
                x = line_intersection(
                    line_through(p, q), line_through(u, v)
                )
                if x is None:
                    raise DegeneracyError("parallel crossing segments")
                hits_a.setdefault(ia, []).append(x)
                hits_b.setdefault(ib, []).append(x)
    return hits_a, hits_b


def _split_segments(segs, hits, tag):
    out = []
    for idx, (p, q) in enumerate(segs):
        pts = hits.get(idx)
        if not pts:
            out.append(((p, q), tag))
            continue
        d = (q[0] - p[0], q[1] - p[1])
        chain = [p] + sorted(
            set(pts), key=lambda x: d[0] * (x[0] - p[0]) + d[1] * (x[1] - p[1])
        ) + [q]
        for a, b in zip(chain, chain[1:]):
            if a != b:
                out.append(((a, b), tag))
    return out


def _overlay_subdivision(segs_a, segs_b, M):
    """Planar subdivision induced by two families of non-self-crossing
    segments; returns (points, face cycles, crossing count)."""
    segs_a = _normalize_family(segs_a)
    segs_b = _normalize_family(segs_b)
    hits_a, hits_b = _find_crossings(segs_a, segs_b, M)
    n_cross = sum(len(v) for v in hits_a.values())
    segments = _split_segments(segs_a, hits_a, 0) + _split_segments(
        segs_b, hits_b, 1
    )
    points, faces, _tags = _assemble_subdivision(segments, M)
    return points, faces, n_cross


class _FloatLocator:
    """Grid-binned point location over projected triangles.

    Orientation tests run in floats with an error margin; only ambiguous
    candidates are re-decided exactly, so locating points with large exact
    coordinates stays cheap."""

    def __init__(self, points2, triangles, M, nbins: Optional[int] = None):
        self.points = points2
        self.triangles = triangles
        self.fpts = [(float(x), float(y)) for x, y in points2]
        if nbins is None:
            nbins = min(256, max(8, int(len(triangles) ** 0.5)))
        self.xcuts = _quantile_cuts([p[0] for p in self.fpts], nbins)
        self.ycuts = _quantile_cuts([p[1] for p in self.fpts], nbins)
        self.nby = len(self.ycuts) + 1
        self.bins: List[List[int]] = [
            [] for _ in range((len(self.xcuts) + 1) * self.nby)
        ]
        big = float(M)
        xedges = [-big] + self.xcuts + [big]
        yedges = [-big] + self.ycuts + [big]
        for ti, (i, j, k) in enumerate(triangles):
            xs = [self.fpts[v][0] for v in (i, j, k)]
            ys = [self.fpts[v][1] for v in (i, j, k)]
            pad = 1e-9 * (abs(xs[0]) + abs(xs[1]) + abs(xs[2]) + 1.0) + 1e-12
            # edge functions let long skinny triangles skip the bbox cells
            # they do not actually touch
            edges = []
            for a, b, c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
                ea = ys[b] - ys[a]
                eb = xs[a] - xs[b]
                ec = -(ea * xs[a] + eb * ys[a])
                if ea * xs[c] + eb * ys[c] + ec < 0:
                    ea, eb, ec = -ea, -eb, -ec
                edges.append((ea, eb, ec))
            scale = max(abs(v) for v in (xs + ys)) + 1.0
            tol = 1e-9 * scale * scale + pad * scale
            for bx in range(
                self._binx(min(xs) - pad), self._binx(max(xs) + pad) + 1
            ):
                cx0 = xedges[bx]
                cx1 = xedges[bx + 1]
                for by in range(
                    self._biny(min(ys) - pad), self._biny(max(ys) + pad) + 1
                ):
                    cy0 = yedges[by]
                    cy1 = yedges[by + 1]
                    hit = True
                    for ea, eb, ec in edges:
                        if (
                            max(
                                ea * cx0 + eb * cy0,
                                ea * cx0 + eb * cy1,
                                ea * cx1 + eb * cy0,
                                ea * cx1 + eb * cy1,
                            )
                            + ec
                            < -tol
                        ):
                            hit = False
                            break
                    if hit:
                        self.bins[bx * self.nby + by].append(ti)

    def _binx(self, x: float) -> int:
        from bisect import bisect_right

        return bisect_right(self.xcuts, x)

    def _biny(self, y: float) -> int:
        from bisect import bisect_right

        return bisect_right(self.ycuts, y)

    def locate(self, p) -> Optional[int]:
        fx, fy = float(p[0]), float(p[1])
        fpts = self.fpts
        for ti in self.bins[self._binx(fx) * self.nby + self._biny(fy)]:
            i, j, k = self.triangles[ti]
            ax, ay = fpts[i]
            bx, by = fpts[j]
            cx, cy = fpts[k]
            clear = True
            inside = True
            for ux, uy, vx, vy in (
                (ax, ay, bx, by),
                (bx, by, cx, cy),
                (cx, cy, ax, ay),
            ):
                t1 = (vx - ux) * (fy - uy)
                t2 = (vy - uy) * (fx - ux)
                d = t1 - t2
                s = _F_EPS * (abs(t1) + abs(t2))
                if d < -s:
                    inside = False
                    clear = True
                    break
                if d <= s:
                    clear = False
            if inside and clear:
                return ti
            if not clear:
                pa = self.points[i]
                pb = self.points[j]
                pc = self.points[k]
                if (
                    orient2d(pa, pb, p) >= 0
                    and orient2d(pb, pc, p) >= 0
                    and orient2d(pc, pa, p) >= 0
                ):
                    return ti
        return None

    def locate_all(self, p) -> List[int]:
        """All triangles whose closed projection contains p (duplicated or
        touching triangles all reported)."""
        fx, fy = float(p[0]), float(p[1])
        fpts = self.fpts
        out = []
        for ti in self.bins[self._binx(fx) * self.nby + self._biny(fy)]:
            i, j, k = self.triangles[ti]
            ax, ay = fpts[i]
            bx, by = fpts[j]
            cx, cy = fpts[k]
            clear = True
            inside = True
            for ux, uy, vx, vy in (
                (ax, ay, bx, by),
                (bx, by, cx, cy),
                (cx, cy, ax, ay),
            ):
                t1 = (vx - ux) * (fy - uy)
                t2 = (vy - uy) * (fx - ux)
                d = t1 - t2
                s = _F_EPS * (abs(t1) + abs(t2))
                if d < -s:
                    inside = False
                    clear = True
                    break
                if d <= s:
                    clear = False
            if inside and clear:
                out.append(ti)
            elif not clear:
                pa = self.points[i]
                pb = self.points[j]
                pc = self.points[k]
                if (
                    orient2d(pa, pb, p) >= 0
                    and orient2d(pb, pc, p) >= 0
                    and orient2d(pc, pa, p) >= 0
                ):
                    out.append(ti)
        return out


def _locator_for_terrain(T: Terrain) -> _FloatLocator:
    return _FloatLocator(
        [(v[0], v[1]) for v in T.vertices], T.triangles, T.M
    )


def _fan_cells(points, faces):
    """Fan-triangulate convex cells, skipping collinear corners."""
    tris = []
    cell_of = []
    for ci, cyc in enumerate(faces):
        m = len(cyc)
        i0 = min(range(m), key=lambda t: points[cyc[t]])
        for t in range(1, m - 1):
            a = cyc[i0]
            b = cyc[(i0 + t) % m]
            c = cyc[(i0 + t + 1) % m]
            if orient2d(points[a], points[b], points[c]) != 0:
                tris.append((a, b, c))
                cell_of.append(ci)
    return tris, cell_of


# ---------------------------------------------------------------------------
# the textbook per-layer operations (exact level maps)


@dataclass(frozen=True)
class OverlayTriangulation:
    """Confined triangulation of the overlay of two projected levels."""

    k_minus: int
    k_plus: int
    map_points: tuple
    map_faces: tuple
    overlay_vertex_count: int
    crossing_count: int
    triangles: tuple  # 2D coordinate triples
    owners: tuple  # per triangle, index of the division piece it came from
    piece_boundary: tuple  # per piece, boundary edge count
    kappa: int


def overlay_levels(
    H: PlaneSet,
    k_minus: int,
    k_plus: int,
    t: Optional[int] = None,
    seed: int = 0,
    beta: float = 8.0,
) -> OverlayTriangulation:
    """Overlay the projected maps of two exact levels and retriangulate.

    The combined map is divided into small pieces whose hulls are confined-
    triangulated, giving one planar triangulation that is lifted later to
    both levels.  ``t`` sets the division parameter (kappa = t*t); by default
    kappa adapts to the overlay size."""
    from terracut.pdunion import ConvexRegionSet, confined_decomposition
    from terracut.geom import fan_triangulate
    from terracut.levelapprox import _hulls_of_division

    Ta = cached_level(H, k_minus)
    Tb = cached_level(H, k_plus)
    points, faces, n_cross = _overlay_subdivision(
        _triangulation_segments(Ta), _triangulation_segments(Tb), Ta.M
    )
    tris, _cells = _fan_cells(points, faces)
    O = Terrain(
        vertices=[(x, y, Q(0)) for x, y in points],
        triangles=tris,
        supporting_plane=[None] * len(tris),
        faces=[list(c) for c in faces],
        face_plane=[None] * len(faces),
        M=Ta.M,
    )
    kappa = t * t if t is not None else max(9, len(points) // 24)
    G = terrain_to_graph(O)
    pieces = kappa_division(G, max(4, kappa), beta=beta)
    hulls, index = _hulls_of_division(G, pieces)
    dec = confined_decomposition(ConvexRegionSet(tuple(hulls)), seed=seed)
    out = [(tri, owner) for tri, owner in dec.triangles]
    for cap in dec.caps:
        for tri in fan_triangulate(cap.polygon):
            out.append((tri, cap.owner))
    boundary = tuple(
        len(p.outer_cycle or []) + sum(len(h) for h in p.hole_cycles)
        for p in pieces
    )
    return OverlayTriangulation(
        k_minus=k_minus,
        k_plus=k_plus,
        map_points=tuple(points),
        map_faces=tuple(tuple(c) for c in faces),
        overlay_vertex_count=len(points),
        crossing_count=n_cross,
        triangles=tuple(tri for tri, _o in out),
        owners=tuple(index[o] for _t, o in out),
        piece_boundary=boundary,
        kappa=kappa,
    )


@dataclass(frozen=True)
class BoundedPrism:
    """Vertical prism between two lifted copies of one projected triangle."""

    bottom: tuple  # three Point3
    top: tuple  # three Point3

    def z_range_at(self, idx: int):
        return self.bottom[idx][2], self.top[idx][2]


def build_layer(H: PlaneSet, k_minus: int, k_plus: int, T_i) -> List[BoundedPrism]:
    """One prism per triangle of the combined triangulation: bases are the
    vertex-lifts of the triangle onto the two levels."""
    triangles = T_i.triangles if hasattr(T_i, "triangles") else T_i
    prisms = []
    for tri in triangles:
        bottom = tuple(lift_to_level(H, k_minus, p) for p in tri)
        top = tuple(lift_to_level(H, k_plus, p) for p in tri)
        prisms.append(BoundedPrism(bottom=bottom, top=top))
    return prisms


# ---------------------------------------------------------------------------
# the assembled cutting: stacks and terrain-bounded slabs


@dataclass
class Slab:
    """A run of prisms over one shared projected triangulation.

    ``bottom``/``top`` hold the per-triangle affine bounds (None for the
    semi-unbounded side of the bottom and top stacks)."""

    kind: str  # "bottom" | "layer" | "top"
    lo_level: Optional[int]
    hi_level: Optional[int]
    points: list
    triangles: list
    bottom: list
    top: list
    conflicts: list = field(default_factory=list)
    crossings: list = field(default_factory=list)

    _strips: Optional[object] = field(default=None, repr=False)

    @property
    def prism_count(self) -> int:
        return len(self.triangles)

    def locate(self, p: Point2) -> Optional[int]:
        if self._strips is None:
            self._strips = _FloatLocator(self.points, self.triangles, self.M)
        return self._strips.locate(p)

    M: object = None

    def covers(self, p: Point3) -> Optional[int]:
        """Index of one prism containing p (closed), or None."""
        for ti in self.depth_members(p):
            return ti
        return None

    def depth_members(self, p: Point3) -> List[int]:
        """Every prism containing p (closed membership)."""
        if self._strips is None:
            self._strips = _FloatLocator(self.points, self.triangles, self.M)
        out = []
        for ti in self._strips.locate_all((p[0], p[1])):
            hb = self.bottom[ti]
            ht = self.top[ti]
            if hb is not None and p[2] < plane_height(hb, p):
                continue
            if ht is not None and p[2] > plane_height(ht, p):
                continue
            out.append(ti)
        return out


@dataclass(frozen=True)
class LayeredCutting:
    slabs: tuple
    sequence: LevelSequence
    boundary_levels: tuple
    params: dict
    provenance: dict

    @property
    def size(self) -> int:
        return sum(s.prism_count for s in self.slabs)

    @property
    def max_crossing(self) -> int:
        return max(max(s.crossings) for s in self.slabs)

    def depth(self, p: Point3) -> int:
        return sum(len(s.depth_members(p)) for s in self.slabs)

    def to_json_dict(self):
        return {
            "n": self.params["n"],
            "r": str(self.params["r"]),
            "boundary_levels": list(self.boundary_levels),
            "size": self.size,
            "max_crossing": self.max_crossing,
            "slabs": [
                {
                    "kind": s.kind,
                    "lo": s.lo_level,
                    "hi": s.hi_level,
                    "prisms": s.prism_count,
                    "conflict_total": sum(len(c) for c in s.conflicts),
                }
                for s in self.slabs
            ],
            "provenance": self.provenance,
        }


def _window_profile(H: PlaneSet, T: Terrain, lam: int, seed: int):
    """Sampled per-side level window of a terrain around its target level:
    (w_down, w_up) with every interior sample at level in
    [lam - w_down, lam + w_up].  Steers boundary-level selection; the exact
    ordering and crossing checks downstream remain the gates."""
    rng = random.Random(f"window:{seed}")
    wd = wu = 0
    for i, j, k in T.triangles:
        a, b, c = T.vertices[i], T.vertices[j], T.vertices[k]
        for _ in range(2):
            w = sorted((0, rng.randint(1, 98), rng.randint(1, 98), 100))
            u1 = Q(w[1] - w[0], 100)
            u2 = Q(w[2] - w[1], 100)
            u3 = Q(w[3] - w[2], 100)
            p = tuple(u1 * a[m] + u2 * b[m] + u3 * c[m] for m in range(3))
            lvl = level_of_point(H, p)
            wd = max(wd, lam - lvl)
            wu = max(wu, lvl - lam)
    return wd, wu


@dataclass(frozen=True)
class _Boundary:
    terrain: Terrain
    lam: int
    wd: int
    wu: int


def _boundary_terrain(
    H: PlaneSet, lam: int, budget: int, seed: int, cache: dict
) -> _Boundary:
    """Smallest terrain hugging level lam with window total at most budget.

    Larger division parameters give fewer triangles but deeper chord dips,
    so candidates go coarse to fine and the first within budget wins; the
    exact level itself (window zero) is the fallback when affordable."""
    key = (lam, budget)
    if key in cache:
        return cache[key]
    verts = k_level_complexity(H, lam)
    out = None
    if budget > 0 and verts > 200:
        ladder = sorted(
            {max(9, verts // d) for d in (6, 12, 25, 50, 100, 200)},
            reverse=True,
        )
        for kappa in ladder:
            tk = ("T", lam, kappa)
            if tk not in cache:
                try:
                    cand, _owners, _bd = _approx_terrain(
                        H, lam, kappa, seed, 8.0
                    )
                    cache[tk] = (cand, *_window_profile(H, cand, lam, seed))
                except (ValueError, DegeneracyError):
                    cache[tk] = None
            if cache[tk] is None:
                continue
            cand, wd, wu = cache[tk]
            if wd + wu <= budget:
                out = _Boundary(terrain=cand, lam=lam, wd=wd, wu=wu)
                break
    if out is None:
        if verts > 2600:
            raise ValueError(f"exact boundary L_{lam} too large (|L|={verts})")
        out = _Boundary(terrain=cached_level(H, lam), lam=lam, wd=0, wu=0)
    cache[key] = out
    return out


def _slab_between(H: PlaneSet, TA: Terrain, TB: Terrain, la: int, lb: int) -> Slab:
    """Bounded slab between two terrains via the overlay of their
    projections; every overlay cell is planar on both."""
    points, faces, _x = _overlay_subdivision(
        _triangulation_segments(TA), _triangulation_segments(TB), TA.M
    )
    sa = _locator_for_terrain(TA)
    sb = _locator_for_terrain(TB)
    tris, cell_of = _fan_cells(points, faces)
    cell_planes = {}
    for ci, cyc in enumerate(faces):
        m = len(cyc)
        cx = sum(points[v][0] for v in cyc) / m
        cy = sum(points[v][1] for v in cyc) / m
        ta = sa.locate((cx, cy))
        tb = sb.locate((cx, cy))
        if ta is None or tb is None:
            raise DegeneracyError("overlay cell centroid escaped the box")
        hb = TA.triangle_plane(ta)
        ht = TB.triangle_plane(tb)
        for v in cyc:
            if plane_height(hb, points[v]) > plane_height(ht, points[v]):
                raise ValueError(
                    f"slab inversion between L_{la} and L_{lb}"
                )
        cell_planes[ci] = (hb, ht)
    bottom = [cell_planes[ci][0] for ci in cell_of]
    top = [cell_planes[ci][1] for ci in cell_of]
    return Slab(
        kind="layer",
        lo_level=la,
        hi_level=lb,
        points=points,
        triangles=tris,
        bottom=bottom,
        top=top,
        M=TA.M,
    )


def _stack_slab(T: Terrain, lam: int, kind: str) -> Slab:
    planes = [T.triangle_plane(ti) for ti in range(len(T.triangles))]
    return Slab(
        kind=kind,
        lo_level=None if kind == "bottom" else lam,
        hi_level=lam if kind == "bottom" else None,
        points=[(v[0], v[1]) for v in T.vertices],
        triangles=list(T.triangles),
        bottom=[None] * len(planes) if kind == "bottom" else planes,
        top=planes if kind == "bottom" else [None] * len(planes),
        M=T.M,
    )


def _fill_conflicts(H: PlaneSet, slab: Slab) -> None:
    """Conflict list (closed) and crossing count (open interior) per prism.

    Vectorized float arithmetic with an error margin screens the clear
    cases; anything near the margin is re-decided exactly."""
    import numpy as np

    pts = np.array([[float(x), float(y)] for x, y in slab.points])
    pl = np.array([[float(h.a), float(h.b), float(h.c)] for h in H.planes])
    hv = pts @ pl[:, :2].T + pl[:, 2]  # (P, nplanes)
    scale = np.abs(pts) @ np.abs(pl[:, :2]).T + np.abs(pl[:, 2]) + 1.0
    tri = np.array(slab.triangles)  # (T, 3)

    def bound_coefs(planes):
        out = np.zeros((len(planes), 3))
        mask = np.zeros(len(planes), dtype=bool)
        for i, h in enumerate(planes):
            if h is None:
                mask[i] = True
            else:
                out[i] = (float(h.a), float(h.b), float(h.c))
        return out, mask

    cb, open_b = bound_coefs(slab.bottom)
    ct, open_t = bound_coefs(slab.top)
    nT = len(slab.triangles)
    crossing = np.zeros((nT, len(pl)), dtype=bool)
    ambiguous = np.zeros((nT, len(pl)), dtype=bool)
    for lo_i in range(0, nT, 8192):
        sl = slice(lo_i, min(lo_i + 8192, nT))
        t = tri[sl]
        vpts = pts[t]  # (T, 3, 2)
        zb = np.einsum("tvj,tj->tv", vpts, cb[sl, :2]) + cb[sl, 2:3]
        zt = np.einsum("tvj,tj->tv", vpts, ct[sl, :2]) + ct[sl, 2:3]
        hvt = hv[t]  # (T, 3, nplanes)
        db = zb[:, :, None] - hvt
        dt = zt[:, :, None] - hvt
        db[open_b[sl]] = -np.inf
        dt[open_t[sl]] = np.inf
        dmin = np.minimum(db.min(axis=1), dt.min(axis=1))  # (T, nplanes)
        dmax = np.maximum(db.max(axis=1), dt.max(axis=1))
        margin = 1e-6 * scale[t].max(axis=1)
        crossing[sl] = (dmin < -margin) & (dmax > margin)
        disjoint = (dmin > margin) | (dmax < -margin)
        ambiguous[sl] = ~(crossing[sl] | disjoint)

    slab.conflicts = []
    slab.crossings = []
    for ti in range(len(slab.triangles)):
        conf = list(np.nonzero(crossing[ti])[0])
        ncross = len(conf)
        for hi_ in np.nonzero(ambiguous[ti])[0]:
            h = H.planes[hi_]
            hb = slab.bottom[ti]
            ht = slab.top[ti]
            emin, emax = None, None
            for v in slab.triangles[ti]:
                p2 = slab.points[v]
                hval = plane_height(h, p2)
                for bnd in (hb, ht):
                    if bnd is None:
                        continue
                    d = plane_height(bnd, p2) - hval
                    emin = d if emin is None or d < emin else emin
                    emax = d if emax is None or d > emax else emax
            lo_sign = -1 if hb is None else sign(emin)
            hi_sign = 1 if ht is None else sign(emax)
            if lo_sign <= 0 <= hi_sign:
                conf.append(hi_)
                if lo_sign < 0 < hi_sign:
                    ncross += 1
        slab.conflicts.append(tuple(sorted(int(x) for x in conf)))
        slab.crossings.append(ncross)


def _boundary_chain(
    H: PlaneSet, seq: LevelSequence, bound, budget: int, margin: int,
    seed: int, cache: dict
) -> List[_Boundary]:
    """Greedy chain of drawn levels with terrains whose windows leave each
    slab both ordered (gap exceeds the facing window sides) and sparse
    (gap plus the outward window sides at most n/r)."""
    start = seq.k_plus[1]
    end = seq.k_minus[seq.r]
    values = [v for v in seq.values() if start <= v <= end]
    chain = [_boundary_terrain(H, start, budget, seed, cache)]
    while chain[-1].lam < end:
        A = chain[-1]
        hi = min(A.lam + int(bound) - A.wd, end)
        placed = False
        for v in sorted((x for x in values if A.lam < x <= hi), reverse=True):
            B = _boundary_terrain(H, v, budget, seed, cache)
            gap = v - A.lam
            exact_pair = A.wd == A.wu == 0 and B.wd == B.wu == 0
            slack = 0 if exact_pair else margin
            if (
                gap >= A.wu + B.wd + margin
                and gap <= bound - A.wd - B.wu - slack
            ):
                chain.append(B)
                placed = True
                break
        if not placed:
            raise ValueError(
                f"no feasible boundary level above L_{A.lam}"
            )
    return chain


def build_layered_cutting(
    H: PlaneSet, r, seed: int = 0, c=Q(1, 4)
) -> LayeredCutting:
    """Layered (1/r)-cutting: bottom stack, terrain-bounded slabs, top stack.

    The level sequence is drawn at the rescaled r' = min(ceil(r/c), n//4);
    boundary terrains are then placed on a subsequence of the drawn levels
    whose gaps leave room for the terrains' level windows, so that every
    prism is crossed by at most n/r planes.  The whole construction is
    verified (slab ordering exactly, crossing bound exactly) and retried
    with tighter windows on failure."""
    n = H.n
    r_q = Q(r)
    if not 1 <= r_q <= n // 8:
        raise ValueError(f"r={r} out of range for n={n}")
    bound = Q(n) / r_q
    r_eff = min(math.ceil(r_q / c), n // 4)
    seq = sample_level_sequence(n, r_eff, seed)
    budget0 = max(0, (int(bound) - 1) // 2)
    attempts = [(budget0, 2), (max(0, budget0 - 2), 3), (0, 2)]
    last = None
    cache: dict = {}
    for attempt, (budget, margin) in enumerate(attempts):
        try:
            chain = _boundary_chain(
                H, seq, bound, budget, margin, seed * 101, cache
            )
            terrains = [b.terrain for b in chain]
            levels = [b.lam for b in chain]
            slabs = []

            def add(s):
                _fill_conflicts(H, s)
                worst = max(s.crossings)
                if worst > bound:
                    raise ValueError(
                        f"prism crossed by {worst} > n/r = {bound} planes"
                    )
                slabs.append(s)

            add(_stack_slab(terrains[0], levels[0], "bottom"))
            for j in range(1, len(levels)):
                add(
                    _slab_between(
                        H,
                        terrains[j - 1],
                        terrains[j],
                        levels[j - 1],
                        levels[j],
                    )
                )
            add(_stack_slab(terrains[-1], levels[-1], "top"))
        except (ValueError, DegeneracyError) as exc:
            last = exc
            continue
        return LayeredCutting(
            slabs=tuple(slabs),
            sequence=seq,
            boundary_levels=tuple(levels),
            params={
                "n": n,
                "r": r_q,
                "r_eff": r_eff,
                "c": c,
                "budget": budget,
                "margin": margin,
                "windows": [(b.wd, b.wu) for b in chain],
            },
            provenance={"seed": seed, "attempt": attempt},
        )
    raise RuntimeError(f"layered cutting failed: {last}")


# ---------------------------------------------------------------------------
# verification


def _uncovered_witness(cut: LayeredCutting, slab: Slab) -> Optional[Point3]:
    """Point of coverage depth 0 reconstructed from a slab whose projection
    fails to tile the box.

    Interior triangulation edges appear in two triangles and box edges in
    one, so a hole is outlined by unmatched non-box edges; its centroid is
    probed at every z-gap between the bound surfaces above that spot."""
    from collections import Counter

    count: Counter = Counter()
    for (i, j, k) in slab.triangles:
        for u, v in ((i, j), (j, k), (k, i)):
            count[(u, v) if u < v else (v, u)] += 1
    M = slab.M

    def on_box(u, v):
        p, q = slab.points[u], slab.points[v]
        return (p[0] == q[0] and abs(p[0]) == M) or (
            p[1] == q[1] and abs(p[1]) == M
        )

    loose = [e for e, c in count.items() if c == 1 and not on_box(*e)]
    if not loose:
        return None
    verts = {u for e in loose for u in e}
    spots: List = [
        (
            sum(slab.points[u][0] for u in verts) / len(verts),
            sum(slab.points[u][1] for u in verts) / len(verts),
        )
    ]
    for u, v in loose:
        p, q = slab.points[u], slab.points[v]
        mx = (p[0] + q[0]) / 2
        my = (p[1] + q[1]) / 2
        nx, ny = p[1] - q[1], q[0] - p[0]
        t = Q(1, 1 << 12) / (abs(nx) + abs(ny))
        spots.append((mx + t * nx, my + t * ny))
        spots.append((mx - t * nx, my - t * ny))
    for cx, cy in spots:
        if not (abs(cx) < M and abs(cy) < M):
            continue
        if slab._strips is None:
            slab._strips = _FloatLocator(slab.points, slab.triangles, slab.M)
        if slab._strips.locate_all((cx, cy)):
            continue  # projection still covered here; hole is elsewhere
        zs = set()
        for s in cut.slabs:
            if s._strips is None:
                s._strips = _FloatLocator(s.points, s.triangles, s.M)
            for ti in s._strips.locate_all((cx, cy)):
                for bnd in (s.bottom[ti], s.top[ti]):
                    if bnd is not None:
                        zs.add(plane_height(bnd, (cx, cy)))
        zcuts = sorted(zs)
        cands: List = []
        if zcuts:
            cands.append(zcuts[0] - 1)
            cands += [(a + b) / 2 for a, b in zip(zcuts, zcuts[1:])]
            cands.append(zcuts[-1] + 1)
        else:
            cands.append(Q(0))
        for z in cands:
            p = (cx, cy, z)
            if cut.depth(p) == 0:
                return p
    return None


def verify_layered(
    cut: LayeredCutting,
    H: PlaneSet,
    r,
    seed: int = 0,
    n_points: int = 2000,
    probe_all: bool = False,
) -> dict:
    """Coverage-depth sampling, crossing bounds, per-slab tiling, size."""
    errors = []
    bound = Q(H.n) / Q(r)
    for si, s in enumerate(cut.slabs):
        total = Q(0)
        for (i, j, k) in s.triangles:
            total += polygon_area2(
                [s.points[i], s.points[j], s.points[k]]
            )
        if total != (2 * s.M) ** 2 * 2:
            errors.append(f"slab {si} projection does not tile the box")
            w = _uncovered_witness(cut, s)
            if w is not None:
                errors.append(
                    f"coverage depth 0 at {tuple(map(float, w))}"
                )
        seen_tris: dict = {}
        for ti, (i, j, k) in enumerate(s.triangles):
            key = tuple(sorted((s.points[i], s.points[j], s.points[k])))
            if key in seen_tris and (
                s.bottom[ti] == s.bottom[seen_tris[key]]
                and s.top[ti] == s.top[seen_tris[key]]
            ):
                cx = sum(p[0] for p in key) / 3
                cy = sum(p[1] for p in key) / 3
                hb, ht = s.bottom[ti], s.top[ti]
                if hb is None:
                    z = plane_height(ht, (cx, cy)) - 1
                elif ht is None:
                    z = plane_height(hb, (cx, cy)) + 1
                else:
                    z = (
                        plane_height(hb, (cx, cy))
                        + plane_height(ht, (cx, cy))
                    ) / 2
                d = cut.depth((cx, cy, z))
                errors.append(
                    f"slab {si} prism {ti} interior covered {d} times"
                )
            else:
                seen_tris[key] = ti
        for ti, ncross in enumerate(s.crossings):
            if ncross > bound:
                errors.append(
                    f"slab {si} prism {ti} crossed by {ncross} > {bound}"
                )

    M = cut.slabs[0].M
    zspan = max(
        abs(plane_height(h, (M, M)))
        + abs(plane_height(h, (-M, -M)))
        + abs(plane_height(h, (M, -M)))
        for h in H.planes
    )
    rng = random.Random(f"depth:{seed}")
    denom = 1 << 20
    bad_depth = 0
    for _ in range(n_points):
        p = (
            -M + 2 * M * Q(rng.randint(0, denom), denom),
            -M + 2 * M * Q(rng.randint(0, denom), denom),
            -zspan + 2 * zspan * Q(rng.randint(0, denom), denom),
        )
        d = cut.depth(p)
        if d not in (1, 2):
            bad_depth += 1
            if bad_depth <= 5:
                errors.append(
                    f"point {tuple(map(float, p))} has coverage depth {d}"
                )

    probe_rng = random.Random(f"probe:{seed}")
    for si, s in enumerate(cut.slabs):
        idxs = (
            range(len(s.triangles))
            if probe_all
            else probe_rng.sample(
                range(len(s.triangles)), min(40, len(s.triangles))
            )
        )
        for ti in idxs:
            i, j, k = s.triangles[ti]
            cx = (s.points[i][0] + s.points[j][0] + s.points[k][0]) / 3
            cy = (s.points[i][1] + s.points[j][1] + s.points[k][1]) / 3
            hb = s.bottom[ti]
            ht = s.top[ti]
            zb = (
                plane_height(hb, (cx, cy)) if hb is not None else None
            )
            zt = (
                plane_height(ht, (cx, cy)) if ht is not None else None
            )
            if zb is None:
                z = zt - 1
            elif zt is None:
                z = zb + 1
            else:
                z = (zb + zt) / 2
            d = cut.depth((cx, cy, z))
            if d < 1:
                errors.append(
                    f"slab {si} prism {ti} interior not covered (depth 0)"
                )
            elif d > 1:
                errors.append(
                    f"slab {si} prism {ti} interior covered {d} times"
                )

    return {
        "ok": not errors,
        "errors": errors,
        "size": cut.size,
        "max_crossing": cut.max_crossing,
        "size_per_r3": cut.size / float(Q(r)) ** 3,
    }
