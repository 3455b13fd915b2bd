"""Approximate k-levels and shallow cuttings by semi-unbounded prisms.

An approximate level is built by taking an exact level of slightly higher
index, dividing its planar graph into small pieces, taking the convex hulls
of the pieces (a set of convex pseudo-disks covering the box), running the
confined triangulation on the hulls, and lifting every triangle vertex back
onto the chosen exact level.  Each lifted triangle then sits inside one hull,
which bounds the number of planes crossing it.

A shallow cutting drops a semi-unbounded vertical prism below every triangle
of such a terrain; conflict lists are computed by the exact three-vertex
test.  The sampled construction runs the same pipeline on a random subset of
the planes and verifies the result against the full set, redrawing on
failure.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from terracut.division import kappa_division, piece_polygon, terrain_to_graph
from terracut.geom import (
    DegeneracyError,
    Plane,
    Point2,
    Point3,
    convex_hull,
    fan_triangulate,
    plane_height,
)
from terracut.oracle import (
    Terrain,
    cached_level,
    k_level_complexity,
    level_of_point,
    lift_to_level,
    low_vertices,
    verify_terrain,
)
from terracut.pdunion import ConvexRegionSet, confined_decomposition
from terracut.planes import PlaneSet
from terracut.scalar import Q, format_rational, sign

__all__ = [
    "ApproxParams",
    "ApproxLevel",
    "Prism",
    "SampleParams",
    "ShallowCutting",
    "UnboundedTriangle",
    "Wedge",
    "approximate_level_exact",
    "build_prisms",
    "choose_level",
    "lift_unbounded_triangle",
    "shallow_cutting_exact",
    "shallow_cutting_sampled",
    "verify_shallow_cutting",
]


# ---------------------------------------------------------------------------
# parameters


@dataclass(frozen=True)
class ApproxParams:
    """Derived constants of the approximate-level construction.

    ``t`` is the nominal piece parameter ((c*n - 43.5*r) / (9*beta*r)); at
    desk scale it is usually below 1, so the pipeline runs on the surrogate
    ``t_eff`` instead and certifies its output by the oracle.  ``k1``/``k2``
    bracket the level index the construction may pick.
    """

    n: int
    r: object  # rational n/k
    eps: object
    beta: float = 8.0

    @property
    def c(self):
        return Q(self.eps) / 3

    @property
    def k(self):
        return Q(self.n) / Q(self.r)

    @property
    def t(self):
        beta_q = Q(int(self.beta * 2), 2)
        return (self.c * self.n - Q(87, 2) * Q(self.r)) / (9 * beta_q * Q(self.r))

    @property
    def k1(self):
        return (1 + self.c) * self.k

    @property
    def k2(self):
        return (1 + 2 * self.c) * self.k

    @property
    def target_pieces(self) -> int:
        """Desired division size: a small multiple of r/eps^3."""
        return max(4, math.ceil(4 * float(self.r) / float(self.eps) ** 3))

    def kappa_for(self, complexity: int) -> int:
        """Piece size that splits a level of the given complexity into about
        ``target_pieces`` pieces (the desk-scale stand-in for kappa = t^2,
        whose paper value is negative at these sizes)."""
        return max(9, math.ceil(complexity / self.target_pieces))


@dataclass(frozen=True)
class SampleParams:
    """Sample sizes for the randomized shallow-cutting construction."""

    n: int
    r: object
    eps: object
    b: float = 4.0

    @property
    def log_r(self) -> float:
        return max(math.log(float(self.r)), 1.0)

    @property
    def n_prime(self) -> int:
        return math.ceil(self.b * float(self.r) * self.log_r / float(self.eps) ** 2)

    @property
    def k_prime(self) -> int:
        return math.ceil(
            self.b * (1 + float(self.eps)) * self.log_r / float(self.eps) ** 2
        )

    @property
    def t_prime(self) -> int:
        return math.ceil(float(self.eps) * self.k_prime)


# ---------------------------------------------------------------------------
# level selection


def _level_window(k_lo: int, k_hi: int, n: int):
    k_lo = max(k_lo, 0)
    k_hi = min(k_hi, n - 1)
    if k_lo > k_hi:
        raise ValueError(f"empty level range [{k_lo}, {k_hi}]")
    return range(k_lo, k_hi + 1)


def choose_level(H: PlaneSet, params: ApproxParams) -> int:
    """The level index in [k1, k2] of minimum complexity (ties: smallest)."""
    window = _level_window(
        math.ceil(params.k1), math.floor(params.k2), H.n
    )
    return min(window, key=lambda k: (k_level_complexity(H, k), k))


# ---------------------------------------------------------------------------
# the exact-path pipeline


@dataclass(frozen=True)
class ApproxLevel:
    """Approximate-level terrain with its construction record.

    ``owners[ti]`` is the index of the hull (= division piece) containing
    triangle ti, or None on the exact-level fallback; ``piece_boundary``
    lists each piece's boundary edge count (the per-triangle crossing budget
    scales with the owner's boundary length).
    """

    terrain: Terrain
    xi: int
    params: ApproxParams
    owners: Optional[tuple]
    piece_boundary: Optional[tuple]
    beta_used: float
    provenance: str


def _hulls_of_division(G, pieces):
    hulls = []
    index = []
    for pi, piece in enumerate(pieces):
        res = piece_polygon(G, piece)
        if res is None:
            continue
        outer, _holes = res
        h = convex_hull([(v[0], v[1]) for v in outer])
        if not h.degenerate and len(h) >= 3:
            hulls.append(h)
            index.append(pi)
    return hulls, index


def _lifted_terrain(HS: PlaneSet, xi: int, dec, M) -> Tuple[Terrain, list]:
    """Lift a confined decomposition of the box back onto L_xi of HS."""
    tris2 = [(tri, owner) for tri, owner in dec.triangles]
    for cap in dec.caps:
        # caps can only appear with zero hull slack; keep the terrain pure
        # triangles by fanning them
        for tri in fan_triangulate(cap.polygon):
            tris2.append((tri, cap.owner))
    vid = {}
    vertices: List[Point3] = []
    triangles = []
    owners = []
    for tri, owner in tris2:
        idxs = []
        for p in tri:
            key = (Q(p[0]), Q(p[1]))
            if key not in vid:
                vid[key] = len(vertices)
                vertices.append(lift_to_level(HS, xi, key))
            idxs.append(vid[key])
        triangles.append(tuple(idxs))
        owners.append(owner)
    T = Terrain(
        vertices=vertices,
        triangles=triangles,
        supporting_plane=[None] * len(triangles),
        faces=[list(t) for t in triangles],
        face_plane=[None] * len(triangles),
        M=M,
        level=xi,
    )
    return T, owners


def _approx_terrain(
    HS: PlaneSet, xi: int, kappa: int, seed: int, beta: float
) -> Tuple[Terrain, tuple, tuple]:
    """Division/hull/confine/lift pipeline at a fixed level index."""
    T = cached_level(HS, xi)
    G = terrain_to_graph(T)
    pieces = kappa_division(G, max(4, kappa), beta=beta)
    hulls, index = _hulls_of_division(G, pieces)
    D = ConvexRegionSet(tuple(hulls))
    dec = confined_decomposition(D, seed=seed)
    T2, owner_hull = _lifted_terrain(HS, xi, dec, T.M)
    boundary_sizes = tuple(
        len(p.outer_cycle or []) + sum(len(h) for h in p.hole_cycles)
        for p in pieces
    )
    owners = tuple(index[o] for o in owner_hull)
    return T2, owners, boundary_sizes


def _exact_level_fallback(H: PlaneSet, k, eps, params, beta, detail):
    """Cheapest exact level inside the sandwich window, preferring xi >= k+2
    so that closure vertices (level xi-2 .. xi) stay at level >= k."""
    hi = math.floor((1 + eps) * k)
    lo = math.ceil(k)
    if lo + 2 <= min(hi, H.n - 1):
        lo = lo + 2
    window = _level_window(lo, hi, H.n)
    xi = min(window, key=lambda j: (k_level_complexity(H, j), j))
    T = cached_level(H, xi)
    out = ApproxLevel(
        terrain=T,
        xi=xi,
        params=params,
        owners=None,
        piece_boundary=None,
        beta_used=beta,
        provenance="exact-level",
    )
    return out if detail else T


def _sandwich_samples_ok(
    H: PlaneSet, T: Terrain, k_lo: int, k_hi: int, seed: int, per_triangle: int = 2
) -> bool:
    """Oracle spot-check that the terrain stays in the level window: every
    vertex and a few random interior points per triangle must have level in
    [k_lo, k_hi] (vertices on the closure of L_xi may sit up to two below
    xi, which the caller's window accounts for)."""
    for v in T.vertices:
        if not k_lo <= level_of_point(H, v) <= k_hi:
            return False
    rng = random.Random(f"sandwich:{seed}")
    for i, j, l in T.triangles:
        a, b, c = T.vertices[i], T.vertices[j], T.vertices[l]
        for _ in range(per_triangle):
            w = sorted((0, rng.randint(1, 98), rng.randint(1, 98), 100))
            u1 = Q(w[1] - w[0], 100)
            u2 = Q(w[2] - w[1], 100)
            u3 = Q(w[3] - w[2], 100)
            p = tuple(u1 * a[m] + u2 * b[m] + u3 * c[m] for m in range(3))
            if not k_lo <= level_of_point(H, p) <= k_hi:
                return False
    return True


def approximate_level_exact(
    H: PlaneSet,
    r,
    eps,
    seed: int = 0,
    beta: float = 8.0,
    detail: bool = False,
):
    """Terrain sandwiched between levels n/r and (1+eps)*n/r of H.

    Every vertex lies exactly on a chosen level L_xi with n/r <= xi <=
    (1+2*eps/3)*n/r, so the sandwich holds by construction; the division
    pipeline keeps the triangle count near-linear in r.  For small n/r the
    exact level itself is returned (its triangulation is already the best
    possible certificate).  With ``detail`` the full construction record is
    returned instead of the bare terrain.
    """
    r = Q(r)
    eps = Q(eps)
    if not 0 < eps <= 1:
        raise ValueError("eps must be in (0, 1]")
    if r <= 0:
        raise ValueError("r must be positive")
    params = ApproxParams(n=H.n, r=r, eps=eps, beta=beta)
    k = params.k
    if math.ceil(k) > H.n - 1:
        raise ValueError(f"target level {k} out of range for n={H.n}")

    if k * eps <= 8:
        return _exact_level_fallback(H, k, eps, params, beta, detail)

    k_lo = math.ceil(k)
    k_hi = min(math.floor((1 + eps) * k), H.n - 1)
    xi = choose_level(H, params)
    kappa0 = params.kappa_for(k_level_complexity(H, xi))
    last = None
    attempts = []
    kap = kappa0
    while kap > 9:
        attempts.append((kap, beta))
        kap = max(9, kap // 4)
    attempts += [(9, beta), (9, beta * 2)]
    for kappa, b in attempts:
        try:
            T2, owners, boundary = _approx_terrain(H, xi, kappa, seed, b)
        except (ValueError, DegeneracyError) as exc:
            last = exc  # division constants were too tight; shrink and re-run
            continue
        if not _sandwich_samples_ok(H, T2, k_lo, k_hi, seed):
            # lifted triangles cross too many planes for the level window;
            # smaller pieces cross fewer
            continue
        out = ApproxLevel(
            terrain=T2,
            xi=xi,
            params=params,
            owners=owners,
            piece_boundary=boundary,
            beta_used=b,
            provenance="divided",
        )
        return out if detail else T2
    return _exact_level_fallback(H, k, eps, params, beta, detail)


# ---------------------------------------------------------------------------
# unbounded triangle lifting


@dataclass(frozen=True)
class UnboundedTriangle:
    """Planar strip spanned by segment pq and two parallel rays."""

    p: Point3
    q: Point3
    direction: tuple  # shared 3D ray direction


@dataclass(frozen=True)
class Wedge:
    """Region between two rays from a common apex (in their common plane
    when coplanar, ruled otherwise)."""

    apex: Point3
    d1: tuple
    d2: tuple


def _plane_at_infinity(H: PlaneSet, k: int, p: Point2, d) -> int:
    """Index of the plane vertically above ray p + s*d, s -> inf, at rank k.

    Far along the ray the planes order by their slope in direction d; ties
    (equal slope) keep their height order at p."""
    keyed = sorted(
        range(H.n),
        key=lambda i: (
            H.planes[i].a * d[0] + H.planes[i].b * d[1],
            plane_height(H.planes[i], p),
        ),
    )
    return keyed[k]


def _ray_direction(h: Plane, d) -> tuple:
    return (Q(d[0]), Q(d[1]), h.a * d[0] + h.b * d[1])


def lift_unbounded_triangle(H: PlaneSet, k: int, p: Point2, q: Point2, dp, dq):
    """Lift an unbounded triangle (segment pq plus rays from p and q in
    directions dp and dq) onto level k.

    The segment lifts by vertex lifting; each ray lifts parallel to the
    plane vertically above it at infinity.  When the two lifted rays and the
    lifted segment are coplanar the result is a single unbounded triangle;
    otherwise an extra ray r from Lift(p) parallel to the lifted q-ray
    splits it into that unbounded triangle plus the wedge between r and the
    lifted p-ray."""
    pp = lift_to_level(H, k, p)
    qq = lift_to_level(H, k, q)
    hp = H.planes[_plane_at_infinity(H, k, p, dp)]
    hq = H.planes[_plane_at_infinity(H, k, q, dq)]
    rp = _ray_direction(hp, dp)
    rq = _ray_direction(hq, dq)

    # coplanarity of segment pq' and the two rays: both rays must lie in the
    # plane spanned by pq' and one of them
    e = (qq[0] - pp[0], qq[1] - pp[1], qq[2] - pp[2])
    nx = e[1] * rq[2] - e[2] * rq[1]
    ny = e[2] * rq[0] - e[0] * rq[2]
    nz = e[0] * rq[1] - e[1] * rq[0]
    vol = nx * rp[0] + ny * rp[1] + nz * rp[2]
    if vol == 0:
        return [UnboundedTriangle(p=pp, q=qq, direction=rq)]
    return [
        UnboundedTriangle(p=pp, q=qq, direction=rq),
        Wedge(apex=pp, d1=rq, d2=rp),
    ]


# ---------------------------------------------------------------------------
# shallow cuttings


@dataclass(frozen=True)
class Prism:
    """All points vertically below the top triangle (unbounded downward)."""

    top: tuple  # three Point3
    triangle: int  # index into the terrain's triangle list
    conflicts: tuple  # plane indices crossing or below the prism

    def covers(self, v: Point3) -> bool:
        """Closed containment of a point whose xy lies in the top's
        projection."""
        from terracut.oracle import plane_from_points3

        h = plane_from_points3(*self.top)
        return v[2] <= plane_height(h, v)


@dataclass(frozen=True)
class ShallowCutting:
    prisms: tuple
    terrain: Terrain
    params: dict
    provenance: dict

    @property
    def conflict_total(self) -> int:
        return sum(len(p.conflicts) for p in self.prisms)

    def to_json_dict(self):
        return {
            "vertices": [
                [format_rational(c) for c in v] for v in self.terrain.vertices
            ],
            "triangles": [list(t) for t in self.terrain.triangles],
            "conflicts": [list(p.conflicts) for p in self.prisms],
            "params": {k: str(v) for k, v in self.params.items()},
            "provenance": self.provenance,
        }


def build_prisms(T: Terrain, H: PlaneSet) -> ShallowCutting:
    """One semi-unbounded prism per terrain triangle.

    A plane crosses or passes below the prism under triangle (a, b, c) iff
    its height is <= the top's height at some vertex (affine functions over
    a triangle attain their extremes at the vertices)."""
    prisms = []
    for ti, (i, j, k) in enumerate(T.triangles):
        top = (T.vertices[i], T.vertices[j], T.vertices[k])
        conf = []
        for hi, h in enumerate(H.planes):
            if any(plane_height(h, v) <= v[2] for v in top):
                conf.append(hi)
        prisms.append(Prism(top=top, triangle=ti, conflicts=tuple(conf)))
    return ShallowCutting(
        prisms=tuple(prisms),
        terrain=T,
        params={"n": H.n},
        provenance={"kind": "exact"},
    )


class _TriStrips:
    """Vertical-strip index over a terrain's projected triangles, for batch
    point location during verification."""

    def __init__(self, T: Terrain, nbins: int = 64):
        self.T = T
        self.lo = -T.M
        self.width = (2 * T.M) / nbins
        self.bins = [[] for _ in range(nbins)]
        self.nbins = nbins
        for ti, (i, j, k) in enumerate(T.triangles):
            xs = [T.vertices[v][0] for v in (i, j, k)]
            b0 = self._bin(min(xs))
            b1 = self._bin(max(xs))
            for b in range(b0, b1 + 1):
                self.bins[b].append(ti)

    def _bin(self, x) -> int:
        b = int((x - self.lo) / self.width)
        return min(max(b, 0), self.nbins - 1)

    def locate(self, p: Point2) -> Optional[int]:
        from terracut.geom import orient2d

        T = self.T
        for ti in self.bins[self._bin(p[0])]:
            i, j, k = T.triangles[ti]
            a, b, c = T.vertices[i], T.vertices[j], T.vertices[k]
            if (
                orient2d(a, b, p) >= 0
                and orient2d(b, c, p) >= 0
                and orient2d(c, a, p) >= 0
            ):
                return ti
        return None


def shallow_cutting_exact(
    H: PlaneSet, k: int, eps, seed: int = 0, beta: float = 8.0
) -> ShallowCutting:
    """Deterministic shallow cutting at level k with conflict lists at most
    (1+eps)*k per prism.

    The divided approximate-level terrain is tried first; when its conflict
    lists overshoot the bound (the usual case at desk scale, where the
    additive crossing constant dominates eps*k), the construction falls back
    to the cheapest exact level inside the sandwich window, whose prisms
    meet the bound whenever eps*k covers the few planes through each
    vertex."""
    eps = Q(eps)
    if not 1 <= k <= H.n - 1:
        raise ValueError(f"level {k} out of range for n={H.n}")
    r = Q(H.n) / k
    bound = (1 + eps) * k

    def attempt_divided():
        if eps * k <= 8:
            return None
        ap = approximate_level_exact(H, r, eps, seed=seed, beta=beta, detail=True)
        cut = build_prisms(ap.terrain, H)
        if max(len(p.conflicts) for p in cut.prisms) <= bound:
            return ShallowCutting(
                prisms=cut.prisms,
                terrain=cut.terrain,
                params={"n": H.n, "k": k, "eps": eps, "r": r},
                provenance={"kind": "divided", "xi": ap.xi},
            )
        return None

    out = attempt_divided()
    if out is not None:
        return out
    window = _level_window(math.ceil(Q(k)), math.floor((1 + eps) * k), H.n)
    xi = min(window, key=lambda j: (k_level_complexity(H, j), j))
    T = cached_level(H, xi)
    cut = build_prisms(T, H)
    return ShallowCutting(
        prisms=cut.prisms,
        terrain=T,
        params={"n": H.n, "k": k, "eps": eps, "r": r},
        provenance={"kind": "exact-level", "xi": xi},
    )


def verify_shallow_cutting(cut: ShallowCutting, H: PlaneSet, k, eps) -> dict:
    """Certificate for a shallow cutting at target level k.

    Checks terrain validity, the vertex sandwich (geometrically: each top
    vertex between the exact levels k and floor((1+eps)k)), the per-prism
    conflict bound (1+eps)*k, and that every arrangement vertex of level
    <= k lies in some prism."""
    k = Q(k)
    eps = Q(eps)
    errors = []
    T = cut.terrain
    rep = verify_terrain(T)
    if not rep["ok"]:
        errors.extend("terrain: " + e for e in rep["errors"])

    k_lo = math.ceil(k)
    k_hi = min(math.floor((1 + eps) * k), H.n - 1)
    for vi, v in enumerate(T.vertices):
        lo = lift_to_level(H, k_lo, (v[0], v[1]))[2]
        hi = lift_to_level(H, k_hi, (v[0], v[1]))[2]
        if not lo <= v[2] <= hi:
            errors.append(
                f"vertex {vi} at {tuple(map(float, v))} outside the level "
                f"sandwich [{k_lo}, {k_hi}]"
            )

    bound = (1 + eps) * k
    for pi, prism in enumerate(cut.prisms):
        if len(prism.conflicts) > bound:
            errors.append(
                f"prism {pi} conflict list {len(prism.conflicts)} > {float(bound)}"
            )

    covered = 0
    strips = _TriStrips(T)
    low = low_vertices(H, math.floor(k))
    for v, _lvl in low:
        ti = strips.locate((v[0], v[1]))
        if ti is None or v[2] > plane_height(T.triangle_plane(ti), v):
            errors.append(
                f"arrangement vertex {tuple(map(float, v))} not covered"
            )
        else:
            covered += 1

    return {
        "ok": not errors,
        "errors": errors,
        "prisms": len(cut.prisms),
        "conflict_total": cut.conflict_total,
        "low_vertices_covered": covered,
    }


def shallow_cutting_sampled(
    H: PlaneSet,
    k: int,
    eps,
    seed: int = 0,
    b: float = 4.0,
    beta: float = 8.0,
    max_retries: int = 20,
) -> ShallowCutting:
    """Randomized shallow cutting at level k, verified and retried.

    A sample of n' planes is drawn, an approximate level of the sample is
    built at a random index near k', and the resulting prisms (with conflict
    lists against the full set) are kept only if every terrain vertex lands
    in the sandwich [k, (1+eps)k] of H; otherwise the computation is redrawn.
    When the sample size reaches n the construction degenerates to the exact
    path.  The caller-facing eps is pre-scaled internally so the verified
    window matches the requested accuracy.
    """
    eps = Q(eps)
    if not 0 < eps <= 1:
        raise ValueError("eps must be in (0, 1]")
    if not 1 <= k <= H.n - 1:
        raise ValueError(f"level {k} out of range for n={H.n}")
    r = Q(H.n) / k
    eps_int = eps / 12
    sp = SampleParams(n=H.n, r=r, eps=eps_int, b=b)

    if sp.n_prime >= H.n:
        detail = approximate_level_exact(H, r, eps, seed=seed, beta=beta, detail=True)
        cut = build_prisms(detail.terrain, H)
        return ShallowCutting(
            prisms=cut.prisms,
            terrain=cut.terrain,
            params={"n": H.n, "k": k, "eps": eps, "r": r},
            provenance={"kind": "exact", "xi": detail.xi, "reason": "sample >= n"},
        )

    k_lo = math.ceil(Q(k))
    k_hi = min(math.floor((1 + eps) * k), H.n - 1)
    last_errors = None
    for attempt in range(max_retries):
        rng = random.Random(f"shallow:{seed}:{attempt}")
        idx = sorted(rng.sample(range(H.n), sp.n_prime))
        S = PlaneSet([H.planes[i] for i in idx], validate=False)
        xi = rng.randint(sp.k_prime, sp.k_prime + sp.t_prime)
        xi = min(max(xi, 0), S.n - 1)
        try:
            sparams = ApproxParams(n=S.n, r=Q(S.n) / max(xi, 1), eps=eps, beta=beta)
            kappa = sparams.kappa_for(k_level_complexity(S, xi))
            T2, _owners, _bd = _approx_terrain(
                S, xi, kappa, seed * 31 + attempt, beta
            )
        except (ValueError, DegeneracyError):
            continue
        ok = True
        errors = []
        for vi, v in enumerate(T2.vertices):
            lo = lift_to_level(H, k_lo, (v[0], v[1]))[2]
            hi = lift_to_level(H, k_hi, (v[0], v[1]))[2]
            if not lo <= v[2] <= hi:
                ok = False
                errors.append(f"vertex {vi} outside sandwich")
                break
        if not ok:
            last_errors = errors
            continue
        cut = build_prisms(T2, H)
        return ShallowCutting(
            prisms=cut.prisms,
            terrain=T2,
            params={"n": H.n, "k": k, "eps": eps, "r": r},
            provenance={
                "kind": "sampled",
                "seed": seed,
                "retries": attempt,
                "sample_size": sp.n_prime,
                "xi": xi,
            },
        )
    raise RuntimeError(
        f"sampled shallow cutting failed {max_retries} times: {last_errors}"
    )
