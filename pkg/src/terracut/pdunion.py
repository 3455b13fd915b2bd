"""Confined triangulation of a union of convex polygonal regions.

The union of m convex regions is decomposed into triangles and caps (a cap is
a region cut off by a chord), every piece lying inside one input region.  The
construction is randomized incremental: regions are inserted in random order
while a vertical-trapezoid decomposition of the complement (inside a universe
box) is maintained with conflict lists.  Each insertion carves out the part of
the new region not yet covered, polygonalizes its boundary arcs into convex
chains, triangulates the interior polygonal pseudo-trapezoids and the holes
pinched off between successive chains, and leaves one crescent per boundary
arc for the final pass, where crescents are split into triangles plus caps.

All arithmetic is exact.  Internally the plane is sheared (x' = x + lam*y,
random rational lam) so that no edge is vertical and every region has
pairwise distinct vertex abscissae; outputs are sheared back, which preserves
areas and containment.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from terracut.geom import (
    ConvexPolygon,
    DegeneracyError,
    convex_boundaries_crossings,
    convex_intersection_area2,
    line_intersection,
    line_side,
    line_through,
    orient2d,
    polygon_area2,
)
from terracut.scalar import Q, parse_rational, sign

__all__ = [
    "Cap",
    "ConfinedDecomposition",
    "ConvexRegionSet",
    "Crescent",
    "UnionState",
    "VerticalTrapezoid",
    "confined_decomposition",
    "decompose_crescent",
    "fill_internal_holes",
    "initial_state",
    "insert_region",
    "polygonalize",
    "random_insertion_order",
    "trapezoid_area2",
    "union_area2",
    "verify_confined",
]


# ---------------------------------------------------------------------------
# input container


@dataclass(frozen=True)
class ConvexRegionSet:
    """A collection of strictly convex CCW polygons.

    With ``pseudo_disk_mode`` the pairwise boundary-crossing count is checked
    to be at most 2 (pairs whose boundaries touch non-transversally cannot be
    counted and are skipped).
    """

    regions: tuple
    pseudo_disk_mode: bool = False

    def __post_init__(self):
        regs = tuple(
            r if isinstance(r, ConvexPolygon) else ConvexPolygon(tuple(r))
            for r in self.regions
        )
        object.__setattr__(self, "regions", regs)
        for idx, r in enumerate(regs):
            if r.degenerate or len(r) < 3 or r.area2() <= 0:
                raise ValueError(f"region {idx} is not a proper convex polygon")
        if self.pseudo_disk_mode:
            for a in range(len(regs)):
                for b in range(a + 1, len(regs)):
                    try:
                        c = convex_boundaries_crossings(regs[a], regs[b])
                    except DegeneracyError:
                        continue
                    if c > 2:
                        raise ValueError(
                            f"regions {a},{b} cross {c} times; not pseudo-disks"
                        )

    def __len__(self):
        return len(self.regions)

    def to_file(self, path):
        with open(path, "w") as f:
            f.write(f"{len(self.regions)}\n")
            for r in self.regions:
                f.write(f"{len(r.vertices)}\n")
                for x, y in r.vertices:
                    f.write(f"{x} {y}\n")

    @classmethod
    def from_file(cls, path, pseudo_disk_mode=False):
        with open(path) as f:
            toks = []
            for line in f:
                line = line.split("#", 1)[0]
                toks.extend(line.split())
        it = iter(toks)
        m = int(next(it))
        regions = []
        for _ in range(m):
            cnt = int(next(it))
            vs = []
            for _ in range(cnt):
                x = parse_rational(next(it))
                y = parse_rational(next(it))
                vs.append((x, y))
            regions.append(ConvexPolygon(tuple(vs)))
        return cls(tuple(regions), pseudo_disk_mode=pseudo_disk_mode)


def random_insertion_order(D: ConvexRegionSet, seed) -> List[int]:
    """Uniform random permutation of the region indices, seeded."""
    perm = list(range(len(D.regions)))
    random.Random(seed).shuffle(perm)
    return perm


# ---------------------------------------------------------------------------
# x-monotone chain utilities (points are (x, y) with strictly increasing x)


def _chain_y(chain, x):
    if not chain[0][0] <= x <= chain[-1][0]:
        raise AssertionError("abscissa outside chain span")
    for (px, py), (qx, qy) in zip(chain, chain[1:]):
        if px <= x <= qx:
            if x == px:
                return py
            if x == qx:
                return qy
            return py + (qy - py) * (x - px) / (qx - px)
    return chain[-1][1]


def _chain_clip(chain, xl, xr):
    """Sub-polyline over [xl, xr] with interpolated endpoints."""
    out = [(xl, _chain_y(chain, xl))]
    out.extend(p for p in chain if xl < p[0] < xr)
    out.append((xr, _chain_y(chain, xr)))
    dedup = [out[0]]
    for p in out[1:]:
        if p != dedup[-1]:
            dedup.append(p)
    return dedup


def _seg_x_events(p1, q1, p2, q2, acc):
    """x-coordinates where two non-vertical segments meet (overlap endpoints
    for collinear segments)."""
    lo = max(min(p1[0], q1[0]), min(p2[0], q2[0]))
    hi = min(max(p1[0], q1[0]), max(p2[0], q2[0]))
    if lo > hi:
        return
    l1 = line_through(p1, q1)
    l2 = line_through(p2, q2)
    pt = line_intersection(l1, l2)
    if pt is None:
        if line_side(l1, p2) == 0:  # collinear overlap
            acc.add(lo)
            acc.add(hi)
        return
    if lo <= pt[0] <= hi:
        # segments vertically meet iff the lines' crossing abscissa lies in
        # both x-spans (segments are non-vertical)
        acc.add(pt[0])


def _chain_cross_xs(A, B, acc):
    for a1, a2 in zip(A, A[1:]):
        for b1, b2 in zip(B, B[1:]):
            if max(a1[0], b1[0]) <= min(a2[0], b2[0]):
                _seg_x_events(a1, a2, b1, b2, acc)


def _hull_chain(points, upper: bool):
    """Upper or lower convex hull chain of points with distinct x."""
    pts = sorted(set(points))
    out = []
    for p in pts:
        while len(out) >= 2:
            o = orient2d(out[-2], out[-1], p)
            if (o >= 0) if upper else (o <= 0):
                out.pop()
            else:
                break
        out.append(p)
    return out


def _triangulate_between(lower, upper):
    """Triangles tiling the region between two x-monotone chains that share
    their x-span (a left-to-right slab scan; pinched slabs contribute
    nothing)."""
    if lower[0][0] != upper[0][0] or lower[-1][0] != upper[-1][0]:
        raise AssertionError("chains do not share an x-span")
    out = []
    xs = sorted({p[0] for p in lower} | {p[0] for p in upper})
    for a, b in zip(xs, xs[1:]):
        la = (a, _chain_y(lower, a))
        lb = (b, _chain_y(lower, b))
        ua = (a, _chain_y(upper, a))
        ub = (b, _chain_y(upper, b))
        if ua[1] < la[1] or ub[1] < lb[1]:
            raise AssertionError("chains cross")
        for tri in ((la, lb, ub), (la, ub, ua)):
            if orient2d(*tri) != 0:
                out.append(tri)
    return out


def _merge_intervals(iv):
    iv = sorted(iv)
    out = []
    for a, b in iv:
        if out and out[-1][1] >= a:
            if b > out[-1][1]:
                out[-1][1] = b
        else:
            out.append([a, b])
    return [(a, b) for a, b in out]


# ---------------------------------------------------------------------------
# sheared region with top/bottom boundary chains


class _Region:
    __slots__ = ("idx", "v", "poly", "top", "bot", "xmin", "xmax")

    def __init__(self, idx, vertices):
        self.idx = idx
        self.v = tuple(vertices)
        self.poly = ConvexPolygon(self.v)
        xs = [p[0] for p in self.v]
        if len(set(xs)) != len(xs):
            raise DegeneracyError(f"region {idx}: shared abscissae after shear")
        n = len(self.v)
        imin = min(range(n), key=lambda i: xs[i])
        imax = max(range(n), key=lambda i: xs[i])
        # CCW from the leftmost vertex first traverses the bottom chain
        bot = []
        i = imin
        while True:
            bot.append(self.v[i])
            if i == imax:
                break
            i = (i + 1) % n
        top = []
        i = imax
        while True:
            top.append(self.v[i])
            if i == imin:
                break
            i = (i + 1) % n
        top.reverse()
        self.bot = bot
        self.top = top
        self.xmin = xs[imin]
        self.xmax = xs[imax]

    def chain(self, side):
        return self.top if side == "top" else self.bot


# ---------------------------------------------------------------------------
# trapezoids


@dataclass
class VerticalTrapezoid:
    """Points between the ``bottom`` and ``top`` boundary chains of the named
    regions over [xl, xr].  ``role`` is "complement" (outside the union,
    inside the box) or "interior" (a component slab of D_i minus the earlier
    union, owned by region ``owner``)."""

    xl: object
    xr: object
    top: Tuple[int, str]
    bottom: Tuple[int, str]
    role: str
    owner: Optional[int] = None
    conflicts: set = field(default_factory=set)


def _side_points(state, tag, xl, xr):
    return _chain_clip(state.regions[tag[0]].chain(tag[1]), xl, xr)


def _trap_slabs(state, trap):
    """The trapezoid as a list of convex CCW slab quads."""
    top = _side_points(state, trap.top, trap.xl, trap.xr)
    bot = _side_points(state, trap.bottom, trap.xl, trap.xr)
    xs = sorted({p[0] for p in top} | {p[0] for p in bot})
    quads = []
    for a, b in zip(xs, xs[1:]):
        corners = [
            (a, _chain_y(bot, a)),
            (b, _chain_y(bot, b)),
            (b, _chain_y(top, b)),
            (a, _chain_y(top, a)),
        ]
        dedup = []
        for p in corners:
            if p not in dedup:
                dedup.append(p)
        if len(dedup) >= 3 and polygon_area2(dedup) > 0:
            quads.append(tuple(dedup))
    return quads


def trapezoid_area2(state, trap) -> object:
    """Twice the exact area of a trapezoid (shear-invariant)."""
    return sum((polygon_area2(q) for q in _trap_slabs(state, trap)), Q(0))


def _trap_intersects_region(state, slabs, reg_idx) -> bool:
    P = state.regions[reg_idx].v
    for quad in slabs:
        if convex_intersection_area2(P, quad) > 0:
            return True
    return False


# ---------------------------------------------------------------------------
# incremental state


@dataclass
class UnionState:
    D: ConvexRegionSet
    lam: object
    regions: list  # _Region for each input region, plus the box last
    box_index: int
    K: list  # complement trapezoids with conflict lists
    dzero: dict  # region index -> interior trapezoids of its uncovered part
    arcs: dict  # (region, side) -> sorted [_Arc] on the current union boundary
    triangles: list  # ((p, q, r), owner), sheared coordinates
    inserted: list
    hidden_chains: dict  # staging, per insertion
    trap_chains: dict  # region index -> [(trap, bottom chain, top chain)]
    pending_holes: list  # (owner, lower chain, upper chain)
    stats: dict


@dataclass
class _Arc:
    xl: object
    xr: object
    chain: list  # convex x-monotone polyline sharing endpoints with the arc


def _shear(p, lam):
    return (p[0] + lam * p[1], p[1])


def _unshear(p, lam):
    return (p[0] - lam * p[1], p[1])


def initial_state(D: ConvexRegionSet, seed=0) -> UnionState:
    """Sheared regions, the universe box, and the one-trapezoid complement
    decomposition K_0 conflicting with every region."""
    rng = random.Random(f"shear:{seed}")
    m = len(D.regions)
    xs = [x for r in D.regions for x, _ in r.vertices]
    ys = [y for r in D.regions for _, y in r.vertices]
    margin = max(max(xs) - min(xs), max(ys) - min(ys), Q(1))
    corners = [
        (min(xs) - margin, min(ys) - margin),
        (max(xs) + margin, min(ys) - margin),
        (max(xs) + margin, max(ys) + margin),
        (min(xs) - margin, max(ys) + margin),
    ]
    last = None
    for _ in range(64):
        lam = Q(rng.randint(1, 1 << 30), 1 << 38)
        try:
            regions = [
                _Region(i, [_shear(p, lam) for p in r.vertices])
                for i, r in enumerate(D.regions)
            ]
            regions.append(_Region(m, [_shear(p, lam) for p in corners]))
        except DegeneracyError as exc:
            last = exc
            continue
        box = regions[m]
        root = VerticalTrapezoid(
            xl=box.xmin,
            xr=box.xmax,
            top=(m, "top"),
            bottom=(m, "bot"),
            role="complement",
            conflicts=set(range(m)),
        )
        return UnionState(
            D=D,
            lam=lam,
            regions=regions,
            box_index=m,
            K=[root],
            dzero={},
            arcs={},
            triangles=[],
            inserted=[],
            hidden_chains={},
            trap_chains={},
            pending_holes=[],
            stats={"trapezoids_created": 1, "conflict_tests": 0},
        )
    raise last


def insert_region(state: UnionState, i: int) -> UnionState:
    """Carve region i out of the complement decomposition.

    The conflicting complement trapezoids are re-swept slab by slab against
    the region's boundary chains; pieces with identical side tags are glued
    back across fake vertical walls, leaving walls only at genuine features
    (boundary intersection points and region x-extrema)."""
    if i in state.inserted:
        raise ValueError(f"region {i} already inserted")
    Ri = state.regions[i]
    C = [t for t in state.K if i in t.conflicts]
    pieces = []  # (xl, xr, top tag, bottom tag, classification)
    for tau in C:
        top_pts = _side_points(state, tau.top, tau.xl, tau.xr)
        bot_pts = _side_points(state, tau.bottom, tau.xl, tau.xr)
        ev = {tau.xl, tau.xr}
        for xe in (Ri.xmin, Ri.xmax):
            if tau.xl < xe < tau.xr:
                ev.add(xe)
        for side_pts in (top_pts, bot_pts):
            for dch in (Ri.top, Ri.bot):
                _chain_cross_xs(side_pts, dch, ev)
        xs = sorted(x for x in ev if tau.xl <= x <= tau.xr)
        for a, b in zip(xs, xs[1:]):
            xm = (a + b) / 2
            yb = _chain_y(bot_pts, xm)
            yt = _chain_y(top_pts, xm)
            if Ri.xmin < xm < Ri.xmax:
                yDb = _chain_y(Ri.bot, xm)
                yDt = _chain_y(Ri.top, xm)
            else:
                yDb = yDt = None
            if yDb is None or yDt <= yb or yDb >= yt:
                pieces.append((a, b, tau.top, tau.bottom, "out"))
                continue
            if yDb > yb:
                pieces.append((a, b, (i, "bot"), tau.bottom, "out"))
            in_top = tau.top if yDt >= yt else (i, "top")
            in_bot = tau.bottom if yDb <= yb else (i, "bot")
            pieces.append((a, b, in_top, in_bot, "in"))
            if yDt < yt:
                pieces.append((a, b, tau.top, (i, "top"), "out"))

    # glue across fake walls: adjacent pieces with identical side tags merge
    groups: Dict[tuple, list] = {}
    for a, b, tt, bt, cls in pieces:
        groups.setdefault((tt, bt, cls), []).append((a, b))
    new_out, new_in = [], []
    for (tt, bt, cls), spans in groups.items():
        for a, b in _merge_intervals([[s0, s1] for s0, s1 in spans]):
            trap = VerticalTrapezoid(
                xl=a,
                xr=b,
                top=tt,
                bottom=bt,
                role="interior" if cls == "in" else "complement",
                owner=i if cls == "in" else None,
            )
            (new_in if cls == "in" else new_out).append(trap)

    cand = set()
    for tau in C:
        cand |= tau.conflicts
    cand.discard(i)
    for trap in new_out:
        slabs = _trap_slabs(state, trap)
        trap.conflicts = set()
        for r in sorted(cand):
            state.stats["conflict_tests"] += 1
            if _trap_intersects_region(state, slabs, r):
                trap.conflicts.add(r)
    destroyed = set(map(id, C))
    state.K = [t for t in state.K if id(t) not in destroyed] + new_out
    state.dzero[i] = new_in
    state.inserted.append(i)
    state.stats["trapezoids_created"] += len(new_out) + len(new_in)
    return state


# ---------------------------------------------------------------------------
# polygonalization


def _subarc_chain(state, reg, side, a, b, delta_chain):
    """Convex chain for the subarc of region ``reg``'s ``side`` chain over
    [a, b]: the hull (toward the arc) of the subarc endpoints and the prior
    chain's vertices falling strictly inside the span.  Degenerates to the
    chord when no prior vertex sticks into the region between."""
    rc = state.regions[reg].chain(side)
    u = (a, _chain_y(rc, a))
    v = (b, _chain_y(rc, b))
    cand = [u, v] + [p for p in delta_chain if a < p[0] < b]
    return _hull_chain(cand, upper=(side == "top"))


def polygonalize(state: UnionState, i: int):
    """Chains for every arc created by inserting region i.

    Hidden arcs (old union boundary swallowed by the region) and exposed
    remainders of split old arcs get chains spliced from the prior chain of
    the arc they subdivide; fresh arcs (new boundary on the region itself)
    get a chord, bent around the opposite side's chain where the two would
    otherwise cross.  Returns [(tag, xl, xr, chain)] records."""
    traps = state.dzero.get(i, [])
    state.hidden_chains = {}
    produced = []

    spans: Dict[tuple, list] = {}
    for t in traps:
        for tag in (t.top, t.bottom):
            if tag[0] != i:
                if tag[0] == state.box_index:
                    raise AssertionError("box boundary inside a region")
                spans.setdefault(tag, []).append([t.xl, t.xr])

    for key, sp in spans.items():
        reg, side = key
        merged = _merge_intervals(sp)
        entries = sorted(state.arcs.get(key, []), key=lambda e: e.xl)
        # maximal touching runs of current arcs of this region side
        runs, cur = [], []
        for e in entries:
            if cur and cur[-1].xr == e.xl:
                cur.append(e)
            else:
                if cur:
                    runs.append(cur)
                cur = [e]
        if cur:
            runs.append(cur)
        keep = []
        for run in runs:
            hit = [
                idx
                for idx, e in enumerate(run)
                if any(s0 < e.xr and s1 > e.xl for s0, s1 in merged)
            ]
            if not hit:
                keep.extend(run)
                continue
            lo, hi = min(hit), max(hit)
            keep.extend(run[:lo])
            keep.extend(run[hi + 1 :])
            group = run[lo : hi + 1]
            A, B = group[0].xl, group[-1].xr
            gspans = [(s0, s1) for s0, s1 in merged if s0 < B and s1 > A]
            if any(s0 < A or s1 > B for s0, s1 in gspans):
                raise AssertionError("hidden span outside the union boundary")
            delta = list(group[0].chain)
            for e in group[1:]:
                if e.chain[0] != delta[-1]:
                    raise AssertionError("discontinuous prior chain")
                delta.extend(e.chain[1:])
            cuts = sorted({A, B} | {x for s in gspans for x in s})
            dhat = []
            for a, b in zip(cuts, cuts[1:]):
                if a == b:
                    continue
                ch = _subarc_chain(state, reg, side, a, b, delta)
                hidden = any(s0 <= a and b <= s1 for s0, s1 in gspans)
                if hidden:
                    state.hidden_chains.setdefault(key, []).append((a, b, ch))
                else:
                    keep.append(_Arc(a, b, ch))
                produced.append((key, a, b, ch))
                if dhat:
                    dhat.extend(ch[1:])
                else:
                    dhat = list(ch)
            if dhat != delta:
                if side == "top":
                    state.pending_holes.append((reg, delta, dhat))
                else:
                    state.pending_holes.append((reg, dhat, delta))
        state.arcs[key] = sorted(keep, key=lambda e: e.xl)

    # fresh sides, bent around the (already chained) opposite side
    state.trap_chains[i] = []
    for t in traps:
        bc = tc = None
        if t.bottom[0] != i:
            bc = _clip_hidden(state, t.bottom, t.xl, t.xr)
        if t.top[0] != i:
            tc = _clip_hidden(state, t.top, t.xl, t.xr)
        if bc is None:
            bc = _fresh_chain(state, i, "bot", t.xl, t.xr, tc)
            state.arcs.setdefault((i, "bot"), []).append(_Arc(t.xl, t.xr, bc))
            produced.append(((i, "bot"), t.xl, t.xr, bc))
        if tc is None:
            tc = _fresh_chain(state, i, "top", t.xl, t.xr, bc)
            state.arcs.setdefault((i, "top"), []).append(_Arc(t.xl, t.xr, tc))
            produced.append(((i, "top"), t.xl, t.xr, tc))
        state.trap_chains[i].append((t, bc, tc))
    for key in ((i, "bot"), (i, "top")):
        if key in state.arcs:
            state.arcs[key] = sorted(state.arcs[key], key=lambda e: e.xl)
    return produced


def _clip_hidden(state, tag, xl, xr):
    parts = []
    for a, b, ch in sorted(state.hidden_chains.get(tag, ()), key=lambda t: t[0]):
        lo, hi = max(a, xl), min(b, xr)
        if lo >= hi:
            continue
        parts.append(_chain_clip(ch, lo, hi))
    if not parts:
        raise AssertionError("missing hidden chain for a trapezoid side")
    out = parts[0]
    for p in parts[1:]:
        if p[0] != out[-1]:
            raise AssertionError("hidden chains do not concatenate")
        out.extend(p[1:])
    if out[0][0] != xl or out[-1][0] != xr:
        raise AssertionError("hidden chain does not span its trapezoid side")
    return out


def _fresh_chain(state, i, side, xl, xr, opposite):
    rc = state.regions[i].chain(side)
    u = (xl, _chain_y(rc, xl))
    v = (xr, _chain_y(rc, xr))
    cand = [u, v]
    if opposite is not None:
        cand += [p for p in opposite if xl < p[0] < xr]
    return _hull_chain(cand, upper=(side == "top"))


def fill_internal_holes(state: UnionState, i: int):
    """Triangulate the regions pinched between each refined chain and the
    prior chain it replaced; owners are the regions the holes sit inside."""
    out = []
    for owner, lower, upper in state.pending_holes:
        out.extend((tri, owner) for tri in _triangulate_between(lower, upper))
    state.pending_holes = []
    state.triangles.extend(out)
    return out


def _triangulate_trapezoids(state: UnionState, i: int):
    """Triangulate the polygonal pseudo-trapezoids of the newly carved slabs
    (between each trapezoid's two side chains)."""
    out = []
    for _t, bc, tc in state.trap_chains.get(i, ()):
        out.extend((tri, i) for tri in _triangulate_between(bc, tc))
    state.triangles.extend(out)
    return out


# ---------------------------------------------------------------------------
# crescents


@dataclass
class Crescent:
    """Region between a convex boundary arc (a sub-polyline of the owner's
    boundary) and its convex chain; the two share endpoints."""

    owner: int
    arc: list
    chain: list


def _halfplane_through(p, q, samples):
    """(a, b, c) with a*x + b*y + c >= 0 on the side of line pq holding the
    samples; None if every sample is on the line."""
    a, b, c = line_through(p, q)
    for s in samples:
        sd = sign(a * s[0] + b * s[1] + c)
        if sd < 0:
            return (-a, -b, -c)
        if sd > 0:
            return (a, b, c)
    return None


def _ray_split_arc(c0, c1, arc):
    """First hit of the ray from c1 in direction c1-c0 with the arc; returns
    (w, head, tail) with head = arc portion up to w, tail = from w on."""
    L = line_through(c0, c1)
    dx = c1[0] - c0[0]
    best = None  # (x, seg index, point)
    for k, (p, q) in enumerate(zip(arc, arc[1:])):
        pt = line_intersection(L, line_through(p, q))
        if pt is None:
            if line_side(L, p) == 0:  # collinear arc segment on the cut line
                for cand in (p, q):
                    if sign(cand[0] - c1[0]) == sign(dx):
                        if best is None or abs(cand[0] - c1[0]) < abs(
                            best[2][0] - c1[0]
                        ):
                            best = (cand[0], k, cand)
            continue
        if min(p[0], q[0]) <= pt[0] <= max(p[0], q[0]) and sign(
            pt[0] - c1[0]
        ) == sign(dx):
            if best is None or abs(pt[0] - c1[0]) < abs(best[2][0] - c1[0]):
                best = (pt[0], k, pt)
    if best is None:
        raise AssertionError("crescent cut ray misses the convex boundary")
    _, k, w = best
    head = arc[: k + 1]
    if head[-1] != w:
        head = head + [w]
    tail = arc[k + 1 :]
    if not tail or tail[0] != w:
        tail = [w] + tail
    return w, head, tail


def decompose_crescent(cr: Crescent):
    """Split a crescent with t chain vertices into exactly t-2 triangles and
    at most t-1 caps: chop the cap cut off by extending the first chain edge
    to the arc at w, fan triangles from w over the chain edges it sees, and
    recurse on the remainder."""
    arc = list(cr.arc)
    chain = list(cr.chain)
    if arc[0] != chain[0] or arc[-1] != chain[-1]:
        raise AssertionError("crescent arc and chain endpoints differ")
    # an interior chain vertex on the arc pinches the crescent in two;
    # split there and handle each side on its own
    for idx in range(1, len(chain) - 1):
        p = chain[idx]
        if _chain_y(arc, p[0]) == p[1]:
            left = decompose_crescent(
                Crescent(cr.owner, _chain_clip(arc, arc[0][0], p[0]), chain[: idx + 1])
            )
            right = decompose_crescent(
                Crescent(cr.owner, _chain_clip(arc, p[0], arc[-1][0]), chain[idx:])
            )
            return left[0] + right[0], left[1] + right[1]
    cycle = chain + arc[-2:0:-1]
    a2 = polygon_area2(cycle)
    if a2 == 0:
        return [], []
    osign = 1 if a2 > 0 else -1
    tris, caps = [], []
    while True:
        if len(chain) == 2:
            hp = _halfplane_through(chain[0], chain[1], arc[1:-1] or arc)
            if hp is not None:
                caps.append((cr.owner, hp))
            break
        c0, c1 = chain[0], chain[1]
        w, head, arc = _ray_split_arc(c0, c1, arc)
        hp = _halfplane_through(c0, c1, head[1:] or head)
        if hp is not None:
            caps.append((cr.owner, hp))
        j = 1
        while j + 1 < len(chain):
            o = sign(orient2d(chain[j], chain[j + 1], w))
            if o == -osign:
                break
            if o != 0:
                # emit CCW regardless of which side of the arc the fan runs
                if o > 0:
                    tris.append((w, chain[j], chain[j + 1]))
                else:
                    tris.append((w, chain[j + 1], chain[j]))
            j += 1
        if j < 2:
            raise AssertionError("crescent cut sees no chain edge")
        chain = [w] + chain[j:]
    return tris, caps


# ---------------------------------------------------------------------------
# full pipeline and verification


@dataclass(frozen=True)
class Cap:
    owner: int
    halfplane: tuple  # (a, b, c): the cap is owner's region cut to ax+by+c >= 0
    polygon: tuple  # its CCW vertex tuple


@dataclass(frozen=True)
class ConfinedDecomposition:
    m: int
    triangles: tuple  # ((p, q, r), owner)
    caps: tuple  # Cap
    stats: dict

    @property
    def piece_count(self):
        return len(self.triangles) + len(self.caps)

    def to_json_dict(self):
        def fmt(x):
            return str(x)

        return {
            "m": self.m,
            "triangles": [
                {"owner": o, "vertices": [[fmt(x), fmt(y)] for x, y in tri]}
                for tri, o in self.triangles
            ],
            "caps": [
                {
                    "owner": c.owner,
                    "halfplane": [fmt(v) for v in c.halfplane],
                    "vertices": [[fmt(x), fmt(y)] for x, y in c.polygon],
                }
                for c in self.caps
            ],
            "stats": self.stats,
        }


def _finalize_crescents(state: UnionState):
    tris, caps = [], []
    for (reg, side), entries in sorted(state.arcs.items()):
        rc = state.regions[reg].chain(side)
        for e in entries:
            arc_pts = _chain_clip(rc, e.xl, e.xr)
            t2, c2 = decompose_crescent(Crescent(reg, arc_pts, e.chain))
            tris.extend((tri, reg) for tri in t2)
            caps.extend(c2)
    return tris, caps


def confined_decomposition(D: ConvexRegionSet, seed=0) -> ConfinedDecomposition:
    """Insert all regions in seeded random order, triangulating as the union
    grows, then decompose the leftover boundary crescents."""
    order = random_insertion_order(D, seed)
    last = None
    for attempt in range(12):
        try:
            state = initial_state(D, seed=seed * 1000003 + attempt)
            for i in order:
                insert_region(state, i)
                polygonalize(state, i)
                fill_internal_holes(state, i)
                _triangulate_trapezoids(state, i)
            ctris, ccaps = _finalize_crescents(state)
            return _assemble(state, ctris, ccaps)
        except DegeneracyError as exc:
            last = exc
    raise last


def _assemble(state, ctris, ccaps):
    lam = state.lam
    triangles = []
    for tri, owner in state.triangles + ctris:
        triangles.append((tuple(_unshear(p, lam) for p in tri), owner))
    caps = []
    for owner, (a, b, c) in ccaps:
        hp = (a, a * lam + b, c)
        poly = _clip_region(state.D.regions[owner], hp)
        if poly is None:
            continue
        caps.append(Cap(owner=owner, halfplane=hp, polygon=poly))
    stats = dict(state.stats)
    stats["m"] = len(state.D.regions)
    stats["triangles"] = len(triangles)
    stats["caps"] = len(caps)
    return ConfinedDecomposition(
        m=len(state.D.regions),
        triangles=tuple(triangles),
        caps=tuple(caps),
        stats=stats,
    )


def _clip_region(region: ConvexPolygon, hp):
    from terracut.geom import clip_convex

    poly = clip_convex(region.vertices, hp)
    if len(poly) < 3 or polygon_area2(poly) == 0:
        return None
    return poly


# ---------------------------------------------------------------------------
# independent union area (Green's theorem over depth-0 boundary portions)


def _edge_region_cut_ts(p, q, R: ConvexPolygon, acc):
    """Parameter values t in [0, 1] where segment p->q meets the boundary of
    R (collinear overlaps contribute both overlap endpoints)."""

    def t_of(pt):
        if q[0] != p[0]:
            return (pt[0] - p[0]) / (q[0] - p[0])
        return (pt[1] - p[1]) / (q[1] - p[1])

    L = line_through(p, q)
    for r1, r2 in R.edges():
        pt = line_intersection(L, line_through(r1, r2))
        if pt is None:
            if line_side(L, r1) == 0:
                for cand in (r1, r2):
                    t = t_of(cand)
                    if 0 <= t <= 1:
                        acc.add(t)
            continue
        inside_edge = (
            min(r1[0], r2[0]) <= pt[0] <= max(r1[0], r2[0])
            and min(r1[1], r2[1]) <= pt[1] <= max(r1[1], r2[1])
        )
        if inside_edge:
            t = t_of(pt)
            if 0 <= t <= 1:
                acc.add(t)


def _bbox(vs):
    xs = [p[0] for p in vs]
    ys = [p[1] for p in vs]
    return min(xs), max(xs), min(ys), max(ys)


def union_area2(D: ConvexRegionSet):
    """Twice the exact area of the union, via the boundary integral over the
    depth-0 portions of each region's boundary (portions on a duplicated
    boundary are credited to the lowest-indexed region)."""
    boxes = [_bbox(r.vertices) for r in D.regions]
    total = Q(0)
    for d, P in enumerate(D.regions):
        for p, q in P.edges():
            ex0, ex1 = min(p[0], q[0]), max(p[0], q[0])
            ey0, ey1 = min(p[1], q[1]), max(p[1], q[1])
            others = [
                e
                for e in range(len(D.regions))
                if e != d
                and boxes[e][0] <= ex1
                and boxes[e][1] >= ex0
                and boxes[e][2] <= ey1
                and boxes[e][3] >= ey0
            ]
            cuts = {Q(0), Q(1)}
            for e in others:
                _edge_region_cut_ts(p, q, D.regions[e], cuts)
            ts = sorted(cuts)
            for t0, t1 in zip(ts, ts[1:]):
                if t0 == t1:
                    continue
                tm = (t0 + t1) / 2
                pm = (p[0] + tm * (q[0] - p[0]), p[1] + tm * (q[1] - p[1]))
                keep = True
                for e in others:
                    R = D.regions[e]
                    c = R.contains(pm)
                    if c > 0:
                        keep = False
                        break
                    if c == 0:
                        # pm interior to an edge of R (cut points bracket it);
                        # compare boundary directions to classify the overlap
                        keep = _overlap_keep(d, e, p, q, pm, R)
                        if not keep:
                            break
                if keep:
                    A = (p[0] + t0 * (q[0] - p[0]), p[1] + t0 * (q[1] - p[1]))
                    B = (p[0] + t1 * (q[0] - p[0]), p[1] + t1 * (q[1] - p[1]))
                    total += A[0] * B[1] - B[0] * A[1]
    return total


def _overlap_keep(d, e, p, q, pm, R: ConvexPolygon) -> bool:
    """Does the boundary portion of region d through pm stay on the union
    boundary, given it lies on an edge of region e's boundary too?"""
    for r1, r2 in R.edges():
        if orient2d(r1, r2, pm) == 0 and (
            min(r1[0], r2[0]) <= pm[0] <= max(r1[0], r2[0])
            and min(r1[1], r2[1]) <= pm[1] <= max(r1[1], r2[1])
        ):
            cross = (q[0] - p[0]) * (r2[1] - r1[1]) - (q[1] - p[1]) * (
                r2[0] - r1[0]
            )
            if cross != 0:
                continue  # pm is a vertex of R on a transversal corner
            dot = (q[0] - p[0]) * (r2[0] - r1[0]) + (q[1] - p[1]) * (
                r2[1] - r1[1]
            )
            if dot > 0:
                # same interior side: duplicated boundary, count once
                return d < e
            # opposite interior sides: the union continues across
            return False
    # pm sits on a vertex of R only; treat as transversal touch
    return True


def verify_confined(dec: ConfinedDecomposition, D: ConvexRegionSet) -> dict:
    """Exact validation: containment in owners, pairwise open disjointness,
    and area coverage of the union.  Returns a report dict."""
    errors = []
    pieces = []  # (vertices, label)
    for idx, (tri, owner) in enumerate(dec.triangles):
        P = D.regions[owner]
        for v in tri:
            if P.contains(v) < 0:
                errors.append(f"triangle {idx} vertex {v} outside owner {owner}")
                break
        pieces.append((tri, f"triangle {idx}"))
    for idx, cap in enumerate(dec.caps):
        P = D.regions[cap.owner]
        a, b, c = cap.halfplane
        for v in cap.polygon:
            if P.contains(v) < 0 or sign(a * v[0] + b * v[1] + c) < 0:
                errors.append(f"cap {idx} vertex {v} outside owner {cap.owner}")
                break
        pieces.append((cap.polygon, f"cap {idx}"))

    items = sorted(
        (( *_bbox(vs), vs, label) for vs, label in pieces), key=lambda t: t[0]
    )
    for a in range(len(items)):
        ax0, ax1, ay0, ay1, avs, alabel = items[a]
        for b in range(a + 1, len(items)):
            bx0, bx1, by0, by1, bvs, blabel = items[b]
            if bx0 >= ax1:
                break
            if by0 >= ay1 or ay0 >= by1:
                continue
            if convex_intersection_area2(avs, bvs) > 0:
                errors.append(f"{alabel} overlaps {blabel}")

    covered = sum((polygon_area2(vs) for vs, _ in pieces), Q(0))
    target = union_area2(D)
    if covered != target:
        errors.append(f"covered area2 {covered} != union area2 {target}")

    return {
        "ok": not errors,
        "errors": errors,
        "piece_count": dec.piece_count,
        "triangles": len(dec.triangles),
        "caps": len(dec.caps),
        "pieces_per_region": dec.piece_count / max(1, len(D.regions)),
        "union_area2": target,
    }
