"""Arrangement oracle: levels, crossing numbers, exact k-level terrains."""

import math
import random

import pytest

from terracut import oracle
from terracut.gen import random_planes
from terracut.geom import Plane
from terracut.oracle import (
    Terrain,
    crossing_number,
    exact_k_level,
    k_level_complexity,
    level_of_point,
    lift_to_level,
    triangle_crossing_number,
    verify_terrain,
)
from terracut.planes import PlaneSet
from terracut.scalar import Q


def horizontal_stack():
    return PlaneSet([Plane(Q(0), Q(0), Q(c)) for c in (0, 1, 2)], validate=False)


class TestLevelOfPoint:
    def test_between(self):
        # [TRIVIAL]
        H = horizontal_stack()
        assert level_of_point(H, (Q(0), Q(0), Q(3, 2))) == 2

    def test_below_all(self):
        # [TRIVIAL]
        H = horizontal_stack()
        assert level_of_point(H, (Q(0), Q(0), Q(-1))) == 0

    def test_strictness_on_plane(self):
        # [TRIVIAL] a plane through the point is not below it
        H = PlaneSet([Plane(Q(0), Q(0), Q(0))], validate=False)
        assert level_of_point(H, (Q(0), Q(0), Q(0))) == 0


class TestLift:
    def test_middle(self):
        # [TRIVIAL]
        H = horizontal_stack()
        assert lift_to_level(H, 1, (Q(0), Q(0)))[2] == 1

    def test_bottom(self):
        # [TRIVIAL]
        H = horizontal_stack()
        assert lift_to_level(H, 0, (Q(5), Q(5)))[2] == 0

    def test_lift_level_consistency(self, planes20):
        # [DERIVED] lifted point sits on a plane at level in {k-?..k}
        rng = random.Random(17)
        for _ in range(30):
            p = (Q(rng.randint(-500, 500)), Q(rng.randint(-500, 500)))
            v = lift_to_level(planes20, 5, p)
            lvl = level_of_point(planes20, v)
            assert lvl <= 5
            assert any(
                h.height(p) == v[2] for h in planes20.planes
            )
            assert lvl >= 3


class TestCrossing:
    def test_crossing_basics(self):
        # [TRIVIAL]
        H = PlaneSet([Plane(Q(0), Q(0), Q(0))], validate=False)
        assert crossing_number(H, (Q(0), Q(0), Q(-1)), (Q(0), Q(0), Q(1))) == 1
        assert crossing_number(H, (Q(0), Q(0), Q(1)), (Q(1), Q(1), Q(2))) == 0

    def test_touch_counts(self):
        # closed-segment convention: touching the plane counts
        H = PlaneSet([Plane(Q(0), Q(0), Q(0))], validate=False)
        assert crossing_number(H, (Q(0), Q(0), Q(0)), (Q(0), Q(0), Q(2))) == 1

    def test_triangle_inequality_collinear(self, planes12):
        # [DERIVED] quasi-metric triangle inequality along a segment
        rng = random.Random(23)
        for _ in range(200):
            p = tuple(Q(rng.randint(-400, 400)) for _ in range(3))
            r = tuple(Q(rng.randint(-400, 400)) for _ in range(3))
            t = Q(rng.randint(1, 9), 10)
            q = tuple(p[i] + t * (r[i] - p[i]) for i in range(3))
            assert crossing_number(planes12, p, r) <= crossing_number(
                planes12, p, q
            ) + crossing_number(planes12, q, r)

    def test_triangle_crossing(self):
        # [TRIVIAL] one vertex below, two above
        H = PlaneSet([Plane(Q(0), Q(0), Q(0))], validate=False)
        tri = (
            (Q(0), Q(0), Q(-1)),
            (Q(1), Q(0), Q(1)),
            (Q(0), Q(1), Q(2)),
        )
        assert triangle_crossing_number(H, tri) == 1
        above = tuple((v[0], v[1], v[2] + 10) for v in tri)
        assert triangle_crossing_number(H, above) == 0

    def test_triangle_vs_edges(self, planes12):
        # [DERIVED] a plane crossing a triangle crosses two of its sides
        rng = random.Random(31)
        for _ in range(50):
            tri = tuple(
                tuple(Q(rng.randint(-300, 300)) for _ in range(3))
                for _ in range(3)
            )
            e = sorted(
                crossing_number(planes12, tri[i], tri[(i + 1) % 3])
                for i in range(3)
            )
            assert triangle_crossing_number(planes12, tri) <= e[0] + e[1]


class TestExactLevelTrivial:
    def wedge(self):
        return PlaneSet(
            [
                Plane(Q(1), Q(0), Q(0)),
                Plane(Q(-1), Q(0), Q(0)),
                Plane(Q(0), Q(0), Q(1, 2)),
            ]
        )

    def test_lower_envelope(self):
        # lower envelope of z=x, z=-x and a third plane that never attains
        # the minimum: two faces meeting along x=0
        T = exact_k_level(self.wedge(), 0)
        assert len(T.faces) == 2
        assert verify_terrain(T)["ok"]

    def test_upper_envelope(self):
        # upper envelope: all three planes appear
        T = exact_k_level(self.wedge(), 2)
        assert len(T.faces) == 3
        assert verify_terrain(T)["ok"]

    def test_single_plane(self):
        H = PlaneSet([Plane(Q(1), Q(2), Q(3))])
        T = exact_k_level(H, 0)
        assert len(T.faces) == 1
        assert len(T.triangles) == 2


class TestExactLevelSeeded:
    def test_face_levels(self, planes20):
        # [DERIVED] every face interior point has level exactly k
        k = 4
        T = exact_k_level(planes20, k)
        assert verify_terrain(T, pairwise=True)["ok"]
        rng = random.Random(7)
        for ti in rng.sample(range(len(T.triangles)), 40):
            a, b, c = (T.vertices[v] for v in T.triangles[ti])
            cx = (a[0] + b[0] + c[0]) / 3
            cy = (a[1] + b[1] + c[1]) / 3
            cz = (a[2] + b[2] + c[2]) / 3
            assert level_of_point(planes20, (cx, cy, cz)) == k

    def test_vertex_level_window(self, planes20):
        k = 4
        T = exact_k_level(planes20, k)
        for vi in range(len(T.vertices)):
            if T.vertex_on_box(vi):
                continue
            lvl = level_of_point(planes20, T.vertices[vi])
            assert k - 2 <= lvl <= k

    def test_complexity_matches_terrain(self, planes20):
        k = 4
        T = exact_k_level(planes20, k)
        assert k_level_complexity(planes20, k) == T.interior_vertex_count()

    def test_incidence_identity(self, planes12):
        # [DERIVED] sum over k of level complexities = 3 * C(n,3)
        total = sum(planes12.level_complexity(k) for k in range(12))
        assert total == 3 * math.comb(12, 3)

    def test_envelope_complexity_bound(self, planes20):
        # [DERIVED] lower envelope of n planes has at most 2n-5 vertices
        assert k_level_complexity(planes20, 0) <= 2 * 20 - 5

    def test_monotone_height(self, planes20):
        # vertical-line test at random abscissae
        k = 4
        T = exact_k_level(planes20, k)
        rng = random.Random(3)
        M = float(T.M)
        for _ in range(100):
            x = Q(rng.randint(-int(M) + 1, int(M) - 1))
            y = Q(rng.randint(-int(M) + 1, int(M) - 1))
            z = T.height_at((x, y))
            assert z is not None


class TestLemma32:
    def test_halfway_crossing_bound(self, planes40):
        # [PAPER] midpoint-style crossing contraction along a segment:
        # lifting the two interior quarter points to the level of their
        # endpoints costs at most half the endpoint crossing distance
        # plus a constant
        rng = random.Random(41)
        H = planes40
        k = 6
        checked = 0
        while checked < 100:
            p = (Q(rng.randint(-900, 900)), Q(rng.randint(-900, 900)))
            r = (Q(rng.randint(-900, 900)), Q(rng.randint(-900, 900)))
            if p == r:
                continue
            q = tuple((p[i] + r[i]) / 2 for i in range(2))
            pp = lift_to_level(H, k, p)
            rp = lift_to_level(H, k, r)
            qp = lift_to_level(H, k, q)
            mid = tuple((pp[i] + rp[i]) / 2 for i in range(3))
            cr_pr = crossing_number(H, pp, rp)
            cr_q = crossing_number(H, qp, mid)
            assert cr_q <= cr_pr / 2 + 8.5
            checked += 1
