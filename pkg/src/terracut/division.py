"""Kappa-divisions of triangulated biconnected planar graphs.

A projected level terrain becomes a planar triangulation once the outer face
is closed off with an extra vertex v_inf joined to every box-boundary vertex.
The division itself works on faces: alternating median cuts on face centroids
until every piece has at most kappa vertices, then repair passes that restore
connectivity and re-split any piece violating the boundary or hole bounds.
Only the output properties matter downstream; validate_division is the gate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cmp_to_key
from typing import Dict, List, Optional, Sequence, Set, Tuple

from terracut.geom import polygon_area2
from terracut.oracle import Terrain, _dir_cmp
from terracut.scalar import Q


@dataclass
class EmbeddedGraph:
    """Triangulated biconnected planar graph with straight-line coordinates.

    coords[v] is None exactly for v_inf.  Every face is a vertex triple;
    faces[i] for i < n_real_faces are terrain triangles (CCW in the drawing),
    the rest are the artificial closures (v_inf, u, w).
    """

    coords: List[Optional[tuple]]
    faces: List[Tuple[int, int, int]]
    n_real_faces: int
    v_inf: Optional[int]
    M: object

    _edge_faces: Optional[Dict[tuple, list]] = field(default=None, repr=False)

    @property
    def n_vertices(self) -> int:
        return len(self.coords)

    def edge_faces(self) -> Dict[tuple, list]:
        if self._edge_faces is None:
            ef: Dict[tuple, list] = {}
            for fi, (a, b, c) in enumerate(self.faces):
                for u, v in ((a, b), (b, c), (c, a)):
                    key = (u, v) if u < v else (v, u)
                    ef.setdefault(key, []).append(fi)
            self._edge_faces = ef
        return self._edge_faces

    @property
    def n_edges(self) -> int:
        return len(self.edge_faces())

    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + len(self.faces)


def terrain_to_graph(T: Terrain) -> EmbeddedGraph:
    """Close a terrain's projection into a triangulation of the sphere."""
    coords: List[Optional[tuple]] = [
        (v[0], v[1]) for v in T.vertices
    ]
    faces = list(T.triangles)
    M = T.M

    boundary = [
        vi for vi in range(len(T.vertices)) if T.vertex_on_box(vi)
    ]
    if not boundary:
        raise ValueError("terrain does not reach the universe box")

    # order boundary vertices counterclockwise around the box
    def box_key(vi):
        x, y = coords[vi]
        if y == -M:
            return (0, x)
        if x == M:
            return (1, y)
        if y == M:
            return (2, -x)
        return (3, -y)

    ring = sorted(set(boundary), key=box_key)
    v_inf = len(coords)
    coords.append(None)
    for i, u in enumerate(ring):
        w = ring[(i + 1) % len(ring)]
        faces.append((v_inf, w, u))  # interior of the closure face is "outside"

    return EmbeddedGraph(
        coords=coords,
        faces=faces,
        n_real_faces=len(T.triangles),
        v_inf=v_inf,
        M=M,
    )


@dataclass
class Piece:
    faces: List[int]
    vertices: Set[int]
    boundary: Set[int] = field(default_factory=set)
    edges: Set[tuple] = field(default_factory=set)
    outer_cycle: Optional[List[int]] = None
    hole_cycles: List[List[int]] = field(default_factory=list)

    @property
    def holes(self) -> int:
        return len(self.hole_cycles)


def _face_centroids(G: EmbeddedGraph):
    cents = []
    for fi, (a, b, c) in enumerate(G.faces):
        pts = [G.coords[v] for v in (a, b, c) if G.coords[v] is not None]
        x = sum(float(p[0]) for p in pts) / len(pts)
        y = sum(float(p[1]) for p in pts) / len(pts)
        cents.append((x, y))
    return cents


def _vertex_count(G: EmbeddedGraph, face_ids) -> int:
    vs = set()
    for fi in face_ids:
        vs.update(G.faces[fi])
    return len(vs)


def _components(G: EmbeddedGraph, face_ids):
    """Face-connected components (adjacency across shared edges)."""
    face_set = set(face_ids)
    ef = G.edge_faces()
    adj: Dict[int, list] = {fi: [] for fi in face_ids}
    for fi in face_ids:
        a, b, c = G.faces[fi]
        for u, v in ((a, b), (b, c), (c, a)):
            key = (u, v) if u < v else (v, u)
            for fj in ef[key]:
                if fj != fi and fj in face_set:
                    adj[fi].append(fj)
    seen = set()
    comps = []
    for fi in face_ids:
        if fi in seen:
            continue
        stack = [fi]
        comp = []
        seen.add(fi)
        while stack:
            f = stack.pop()
            comp.append(f)
            for g in adj[f]:
                if g not in seen:
                    seen.add(g)
                    stack.append(g)
        comps.append(comp)
    return comps


def _median_split(face_ids, cents):
    xs = [cents[f][0] for f in face_ids]
    ys = [cents[f][1] for f in face_ids]
    axis = 0 if (max(xs) - min(xs)) >= (max(ys) - min(ys)) else 1
    order = sorted(face_ids, key=lambda f: (cents[f][axis], f))
    mid = len(order) // 2
    return order[:mid], order[mid:]


def _trace_boundary(G: EmbeddedGraph, face_ids):
    """Outer cycle and hole cycles of the union of a piece's real faces."""
    directed = set()
    for fi in face_ids:
        if fi >= G.n_real_faces:
            continue
        a, b, c = G.faces[fi]
        for u, v in ((a, b), (b, c), (c, a)):
            if (v, u) in directed:
                directed.remove((v, u))
            else:
                directed.add((u, v))
    if not directed:
        return None, []

    out: Dict[int, list] = {}
    for u, v in directed:
        pu, pv = G.coords[u], G.coords[v]
        d = (pv[0] - pu[0], pv[1] - pu[1])
        out.setdefault(u, []).append((d, v))
    for u in out:
        out[u].sort(key=cmp_to_key(lambda a, b: _dir_cmp(a[0], b[0])))

    visited = set()
    cycles = []
    for start_uv in sorted(directed):
        if start_uv in visited:
            continue
        cyc = []
        u, v = start_uv
        while (u, v) not in visited:
            visited.add((u, v))
            cyc.append(u)
            # arriving at v, leave along the clockwise-next direction from
            # (v->u): keeps the piece interior on the left through pinches
            pu, pv = G.coords[u], G.coords[v]
            back = (pu[0] - pv[0], pu[1] - pv[1])
            lst = out[v]
            lo, hi = 0, len(lst)
            idx = None
            for i, (d, w) in enumerate(lst):
                if _dir_cmp(d, back) >= 0:
                    idx = i
                    break
            if idx is None:
                idx = 0
            # predecessor in CCW order
            d, w = lst[idx - 1]
            u, v = v, w
        cycles.append(cyc)

    outer = None
    holes = []
    for cyc in cycles:
        area2 = polygon_area2([G.coords[i] for i in cyc])
        if area2 > 0:
            if outer is not None:
                # disconnected real-face set (components split elsewhere)
                raise ValueError("piece has multiple outer cycles")
            outer = cyc
        else:
            holes.append(cyc)
    return outer, holes


def kappa_division(
    G: EmbeddedGraph,
    kappa: int,
    beta: float = 8.0,
    hole_cap: int = 4,
) -> List[Piece]:
    """Divide G into connected pieces of <= kappa vertices with <=
    beta*sqrt(kappa) boundary vertices and <= hole_cap holes each.

    The division is computed on the real (terrain) faces; each artificial
    closure face is then attached to the piece of the one real triangle it
    shares its box edge with, so piece polygons stay connected while the
    piece subgraphs absorb v_inf.  The splitting thresholds leave one vertex
    of slack for that.
    """
    if kappa < 4:
        raise ValueError("kappa must be at least 4")
    cents = _face_centroids(G)
    size_limit = kappa - 1 if G.v_inf is not None else kappa
    bound_limit = beta * math.sqrt(kappa) - (1 if G.v_inf is not None else 0)

    real = list(range(G.n_real_faces))

    # phase 1: size-only median splitting
    final: List[List[int]] = []
    stack = [real]
    while stack:
        cur = stack.pop()
        if _vertex_count(G, cur) <= size_limit or len(cur) == 1:
            final.append(cur)
        else:
            lo, hi = _median_split(cur, cents)
            stack.extend([lo, hi])

    # phase 2: connectivity
    pieces_faces: List[List[int]] = []
    for cur in final:
        pieces_faces.extend(_components(G, cur))

    # phase 3: boundary/hole repair; splitting a piece never worsens others
    def build(face_ids) -> Piece:
        vs = set()
        for fi in face_ids:
            vs.update(G.faces[fi])
        return Piece(faces=sorted(face_ids), vertices=vs)

    pieces = [build(f) for f in pieces_faces]
    changed = True
    while changed:
        changed = False
        counts: Dict[int, int] = {}
        for p in pieces:
            for v in p.vertices:
                counts[v] = counts.get(v, 0) + 1
        nxt: List[Piece] = []
        for p in pieces:
            bd = {v for v in p.vertices if counts[v] > 1}
            _, holes = _trace_boundary(G, p.faces)
            ok = len(bd) <= bound_limit and len(holes) <= hole_cap
            if ok or len(p.faces) == 1:
                nxt.append(p)
            else:
                changed = True
                lo, hi = _median_split(p.faces, cents)
                for part in (lo, hi):
                    for comp in _components(G, part):
                        nxt.append(build(comp))
        pieces = nxt

    # phase 4: greedy merging of edge-adjacent pieces.  Median splitting plus
    # component extraction overshoots the piece count; merging small pieces
    # back together (while staying within every limit) restores it.
    ef = G.edge_faces()

    def piece_adjacency(plist):
        owner = {}
        for pi, p in enumerate(plist):
            for fi in p.faces:
                owner[fi] = pi
        adj: Dict[int, Set[int]] = {pi: set() for pi in range(len(plist))}
        for fs in ef.values():
            if len(fs) == 2 and fs[0] < G.n_real_faces and fs[1] < G.n_real_faces:
                a, b = owner[fs[0]], owner[fs[1]]
                if a != b:
                    adj[a].add(b)
                    adj[b].add(a)
        return adj

    merged = True
    while merged:
        merged = False
        adj = piece_adjacency(pieces)
        counts = {}
        for p in pieces:
            for v in p.vertices:
                counts[v] = counts.get(v, 0) + 1
        order = sorted(range(len(pieces)), key=lambda pi: len(pieces[pi].vertices))
        dead: Set[int] = set()
        for pi in order:
            if pi in dead:
                continue
            p = pieces[pi]
            best = None
            for qi in adj[pi]:
                if qi in dead:
                    continue
                q = pieces[qi]
                union_vs = p.vertices | q.vertices
                if len(union_vs) > size_limit:
                    continue
                shared = p.vertices & q.vertices
                bd = sum(
                    1
                    for v in union_vs
                    if counts[v] - (1 if v in shared else 0) > 1
                )
                if bd > bound_limit:
                    continue
                if best is None or len(union_vs) < best[0]:
                    best = (len(union_vs), qi)
            if best is None:
                continue
            qi = best[1]
            q = pieces[qi]
            union_faces = p.faces + q.faces
            _, holes = _trace_boundary(G, union_faces)
            if len(holes) > hole_cap:
                continue
            for v in p.vertices & q.vertices:
                counts[v] -= 1
            p.faces = union_faces
            p.vertices |= q.vertices
            dead.add(qi)
            adj[pi] |= adj[qi] - {pi, qi}
            for ri in adj[qi]:
                adj[ri].discard(qi)
                if ri not in (pi,):
                    adj[ri].add(pi)
            adj[pi].discard(pi)
            merged = True
        if dead:
            pieces = [p for pi, p in enumerate(pieces) if pi not in dead]

    # attach each artificial face to the piece owning its box-edge triangle
    if G.v_inf is not None:
        owner = {}
        for pi, p in enumerate(pieces):
            for fi in p.faces:
                owner[fi] = pi
        ef = G.edge_faces()
        for fi in range(G.n_real_faces, len(G.faces)):
            _, w, u = G.faces[fi]
            key = (u, w) if u < w else (w, u)
            mate = next(f for f in ef[key] if f < G.n_real_faces)
            p = pieces[owner[mate]]
            p.faces.append(fi)
            p.vertices.update(G.faces[fi])

    # final boundary sets against the settled piece list; each edge is
    # assigned to exactly one piece (the owner of its lowest-id face)
    counts = {}
    face_owner = {}
    for pi, p in enumerate(pieces):
        p.faces.sort()
        for v in p.vertices:
            counts[v] = counts.get(v, 0) + 1
        for fi in p.faces:
            face_owner[fi] = pi
    for key, fs in G.edge_faces().items():
        pieces[face_owner[min(fs)]].edges.add(key)
    for p in pieces:
        p.boundary = {v for v in p.vertices if counts[v] > 1}
        p.outer_cycle, p.hole_cycles = _trace_boundary(G, p.faces)
    return pieces


def piece_polygon(G: EmbeddedGraph, piece: Piece):
    """Outer boundary and hole cycles as coordinate lists (None for pieces
    made only of artificial closure faces)."""
    if piece.outer_cycle is None:
        return None
    outer = [G.coords[v] for v in piece.outer_cycle]
    holes = [[G.coords[v] for v in cyc] for cyc in piece.hole_cycles]
    return outer, holes


def validate_division(
    G: EmbeddedGraph,
    pieces: Sequence[Piece],
    kappa: int,
    beta: float = 8.0,
    hole_cap: int = 4,
    c_div: float = 4.0,
) -> dict:
    """Pure validator for division properties (i)-(iv) plus partitioning."""
    report = {
        "ok": True,
        "errors": [],
        "piece_count": len(pieces),
        "max_vertices": 0,
        "max_boundary": 0,
        "max_holes": 0,
        "beta_measured": 0.0,
    }
    limit = beta * math.sqrt(kappa)

    seen_faces: Dict[int, int] = {}
    for pi, p in enumerate(pieces):
        for fi in p.faces:
            if fi in seen_faces:
                report["ok"] = False
                report["errors"].append(
                    f"face {fi} in pieces {seen_faces[fi]} and {pi}"
                )
            seen_faces[fi] = pi
    if len(seen_faces) != len(G.faces):
        report["ok"] = False
        report["errors"].append("pieces do not cover all faces")

    seen_edges: Dict[tuple, int] = {}
    for pi, p in enumerate(pieces):
        for e in p.edges:
            if e in seen_edges:
                report["ok"] = False
                report["errors"].append(
                    f"edge {e} in pieces {seen_edges[e]} and {pi}"
                )
            seen_edges[e] = pi
    if len(seen_edges) != G.n_edges:
        report["ok"] = False
        report["errors"].append("piece edge sets do not partition the edges")

    counts: Dict[int, int] = {}
    for p in pieces:
        for v in p.vertices:
            counts[v] = counts.get(v, 0) + 1

    for pi, p in enumerate(pieces):
        nv = len(p.vertices)
        report["max_vertices"] = max(report["max_vertices"], nv)
        if nv > kappa:
            report["ok"] = False
            report["errors"].append(f"piece {pi} has {nv} > {kappa} vertices")
        bd = {v for v in p.vertices if counts[v] > 1}
        if bd != p.boundary:
            report["ok"] = False
            report["errors"].append(f"piece {pi} boundary set inconsistent")
        report["max_boundary"] = max(report["max_boundary"], len(bd))
        if len(bd) > limit:
            report["ok"] = False
            report["errors"].append(
                f"piece {pi} has {len(bd)} boundary vertices > {limit:.1f}"
            )
        report["max_holes"] = max(report["max_holes"], p.holes)
        if p.holes > hole_cap:
            report["ok"] = False
            report["errors"].append(f"piece {pi} has {p.holes} holes")
        if len(_components(G, p.faces)) != 1:
            report["ok"] = False
            report["errors"].append(f"piece {pi} not connected")

    n = G.n_vertices
    cap = c_div * n / kappa
    if len(pieces) > max(cap, 1):
        report["ok"] = False
        report["errors"].append(
            f"{len(pieces)} pieces > c_div*N/kappa = {cap:.1f}"
        )
    report["beta_measured"] = (
        report["max_boundary"] / math.sqrt(kappa) if pieces else 0.0
    )
    return report
