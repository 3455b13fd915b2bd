"""Approximate levels, prisms, and shallow cuttings against the exact oracle."""

import dataclasses
import math
import random

import pytest

from terracut.gen import random_planes
from terracut.geom import Plane, orient2d
from terracut.levelapprox import (
    ApproxParams,
    SampleParams,
    ShallowCutting,
    UnboundedTriangle,
    Wedge,
    approximate_level_exact,
    build_prisms,
    choose_level,
    lift_unbounded_triangle,
    shallow_cutting_exact,
    shallow_cutting_sampled,
    verify_shallow_cutting,
)
from terracut.oracle import (
    Terrain,
    cached_level,
    k_level_complexity,
    level_of_point,
    lift_to_level,
    low_vertices,
    plane_from_points3,
    triangle_crossing_number,
    verify_terrain,
)
from terracut.planes import PlaneSet
from terracut.scalar import Q


@pytest.fixture(scope="module")
def H60():
    return random_planes(60, 11)


@pytest.fixture(scope="module")
def H96():
    return random_planes(96, 7)


@pytest.fixture(scope="module")
def ap96(H96):
    # divided-path construction record: k = 16, eps = 1
    return approximate_level_exact(H96, 6, 1, seed=3, detail=True)


@pytest.fixture(scope="module")
def cut60(H60):
    return shallow_cutting_exact(H60, 10, 1, seed=2)


class TestParams:
    def test_derived_constants(self):
        p = ApproxParams(n=600, r=6, eps=Q(1, 2))
        assert p.c == Q(1, 6)
        assert p.k == 100
        assert p.k1 == Q(700, 6)
        assert p.k2 == Q(800, 6)
        # t = (c*n - 43.5*r) / (9*beta*r)
        assert p.t == (Q(600, 6) - Q(87, 2) * 6) / (9 * 8 * 6)

    def test_target_pieces_scale(self):
        p = ApproxParams(n=96, r=6, eps=1)
        assert p.target_pieces == 24
        assert p.kappa_for(240) == 10
        assert p.kappa_for(10) == 9  # floor

    def test_sample_params_monotone_in_eps(self):
        small = SampleParams(n=300, r=10, eps=Q(1, 4))
        large = SampleParams(n=300, r=10, eps=Q(1, 2))
        assert small.n_prime > large.n_prime
        assert small.t_prime >= 1


class TestChooseLevel:
    def test_window_of_size_one(self):
        # k = 10, c = 1/20: window [ceil(10.5), floor(11)] = {11}
        H = random_planes(30, 6)
        params = ApproxParams(n=30, r=3, eps=Q(3, 20))
        assert choose_level(H, params) == 11

    def test_minimum_beats_window_average(self):
        H = random_planes(60, 11)
        params = ApproxParams(n=60, r=6, eps=1)  # c = 1/3
        xi = choose_level(H, params)
        lo = math.ceil(params.k1)
        hi = math.floor(params.k2)
        assert lo <= xi <= hi
        window = [k_level_complexity(H, j) for j in range(lo, hi + 1)]
        assert k_level_complexity(H, xi) * len(window) <= sum(window)

    def test_ties_break_to_smallest(self):
        H = random_planes(30, 6)
        params = ApproxParams(n=30, r=3, eps=Q(3, 10))
        xi = choose_level(H, params)
        best = k_level_complexity(H, xi)
        for j in range(math.ceil(params.k1), xi):
            assert k_level_complexity(H, j) > best


class TestApproximateLevel:
    def test_small_instance_sandwich(self):
        # n = 4, k = 2: vertices must sit between levels 2 and min(4, n-1) = 3
        H = random_planes(4, 1)
        T = approximate_level_exact(H, 2, 1)
        assert verify_terrain(T)["ok"]
        for v in T.vertices:
            lo = lift_to_level(H, 2, (v[0], v[1]))[2]
            hi = lift_to_level(H, 3, (v[0], v[1]))[2]
            assert lo <= v[2] <= hi

    def test_divided_path_record(self, H96, ap96):
        assert ap96.provenance == "divided"
        assert verify_terrain(ap96.terrain)["ok"]
        assert len(ap96.owners) == len(ap96.terrain.triangles)
        k = Q(96, 6)
        assert math.ceil(ap96.params.k1) <= ap96.xi <= math.floor(ap96.params.k2)
        k_hi = math.floor((1 + Q(1)) * k)
        for v in ap96.terrain.vertices:
            lo = lift_to_level(H96, math.ceil(k), (v[0], v[1]))[2]
            hi = lift_to_level(H96, k_hi, (v[0], v[1]))[2]
            assert lo <= v[2] <= hi

    def test_interior_points_in_sandwich(self, H96, ap96):
        # spot-check oracle levels strictly inside triangles, not just at vertices
        T = ap96.terrain
        rng = random.Random(5)
        k_lo, k_hi = 16, 32
        for ti in rng.sample(range(len(T.triangles)), 40):
            i, j, l = T.triangles[ti]
            a, b, c = T.vertices[i], T.vertices[j], T.vertices[l]
            for _ in range(3):
                w = sorted((0, rng.randint(1, 98), rng.randint(1, 98), 100))
                u1, u2, u3 = (
                    Q(w[1] - w[0], 100),
                    Q(w[2] - w[1], 100),
                    Q(w[3] - w[2], 100),
                )
                p = tuple(u1 * a[m] + u2 * b[m] + u3 * c[m] for m in range(3))
                assert k_lo <= level_of_point(H96, p) <= k_hi

    def test_crossing_bound_per_owner(self, H96, ap96):
        # each lifted triangle crosses at most 9*t + 43.5 planes, with t the
        # boundary edge count of the piece that owns it
        T = ap96.terrain
        for ti, (i, j, l) in enumerate(T.triangles):
            tri = (T.vertices[i], T.vertices[j], T.vertices[l])
            t_owner = ap96.piece_boundary[ap96.owners[ti]]
            assert triangle_crossing_number(H96, tri) <= 9 * t_owner + Q(87, 2)

    def test_triangle_count_fit(self):
        # one constant C with count <= C * r / eps^3 across seeded runs
        r, eps = 6, 1
        counts = []
        for seed in range(3):
            H = random_planes(72, 20 + seed)
            T = approximate_level_exact(H, r, eps, seed=seed)
            counts.append(len(T.triangles))
        assert max(counts) <= 400 * r / eps**3
        assert max(counts) <= 2 * min(counts)  # stable across seeds

    def test_vertical_line_coverage(self, ap96):
        # xy-monotone surface: every box point is over some triangle
        T = ap96.terrain
        rng = random.Random(9)
        span = 2 * T.M
        for _ in range(200):
            p = (
                -T.M + span * Q(rng.randint(0, 10**6), 10**6),
                -T.M + span * Q(rng.randint(0, 10**6), 10**6),
            )
            assert T.locate(p) is not None

    def test_eps_out_of_range(self):
        H = random_planes(10, 2)
        with pytest.raises(ValueError):
            approximate_level_exact(H, 2, 0)
        with pytest.raises(ValueError):
            approximate_level_exact(H, Q(1, 2), 1)  # level beyond n-1


class TestLiftUnbounded:
    def planes3(self):
        # z = 0, z = -y + 1, z = -2y: distinct slopes in direction (0, -1)
        return PlaneSet(
            [Plane(Q(0), Q(0), Q(0)), Plane(Q(0), Q(-1), Q(1)), Plane(Q(0), Q(-2), Q(0))],
            validate=False,
        )

    def test_coplanar_single_piece(self):
        H = self.planes3()
        out = lift_unbounded_triangle(
            H, 1, (Q(1), Q(-2)), (Q(2), Q(-3)), (0, -1), (0, -1)
        )
        assert len(out) == 1
        (tri,) = out
        assert isinstance(tri, UnboundedTriangle)
        # both endpoints lifted onto z = -y + 1, ray parallel to it
        assert tri.p == (1, -2, 3)
        assert tri.q == (2, -3, 4)
        assert tri.direction == (0, -1, 1)

    def test_two_planes_triangle_plus_wedge(self):
        H = random_planes(12, 4)
        out = lift_unbounded_triangle(
            H, 3, (Q(-3), Q(2)), (Q(3), Q(2)), (-1, 1), (1, 1)
        )
        assert len(out) == 2
        assert isinstance(out[0], UnboundedTriangle)
        assert isinstance(out[1], Wedge)
        assert out[1].apex == out[0].p

    def test_radial_level_window(self):
        H = random_planes(20, 5)
        k = 5
        out = lift_unbounded_triangle(H, k, (Q(-3), Q(2)), (Q(3), Q(2)), (0, 1), (0, 1))
        tri = out[0]
        for j in range(2, 9):
            s = Q(3) ** j
            for base in (tri.p, tri.q):
                d = tri.direction
                pt = (base[0] + s * d[0], base[1] + s * d[1], base[2] + s * d[2])
                assert k - 2 <= level_of_point(H, pt) <= k + 2


def flat_terrain(z, M=Q(4)):
    """Two triangles tiling the box at constant height z."""
    vs = [(-M, -M, z), (M, -M, z), (M, M, z), (-M, M, z)]
    tris = [(0, 1, 2), (0, 2, 3)]
    return Terrain(
        vertices=vs,
        triangles=tris,
        supporting_plane=[None, None],
        faces=[list(t) for t in tris],
        face_plane=[None, None],
        M=M,
    )


class TestBuildPrisms:
    def test_horizontal_stack(self):
        H = PlaneSet(
            [Plane(Q(0), Q(0), Q(i)) for i in range(3)], validate=False
        )
        cut = build_prisms(flat_terrain(Q(3, 2)), H)
        assert len(cut.prisms) == 2
        for prism in cut.prisms:
            assert prism.conflicts == (0, 1)

    def test_conflicts_match_pointwise_test(self):
        # vertex rule == "plane at or below the top somewhere": cross-check by
        # evaluating the top's affine function at sampled interior points too
        H = random_planes(20, 5)
        T = cached_level(H, 4)
        cut = build_prisms(T, H)
        rng = random.Random(3)
        for prism in rng.sample(list(cut.prisms), 25):
            i, j, l = T.triangles[prism.triangle]
            a, b, c = T.vertices[i], T.vertices[j], T.vertices[l]
            top = plane_from_points3(a, b, c)
            pts = [a, b, c]
            for _ in range(10):
                w = sorted((0, rng.randint(0, 100), rng.randint(0, 100), 100))
                u = [Q(w[m + 1] - w[m], 100) for m in range(3)]
                pts.append(
                    tuple(
                        u[0] * a[m] + u[1] * b[m] + u[2] * c[m] for m in range(3)
                    )
                )
            for hi, h in enumerate(H.planes):
                sampled = any(
                    h.height((p[0], p[1])) <= top.height((p[0], p[1]))
                    for p in pts
                )
                assert sampled == (hi in prism.conflicts)

    def test_conflict_lists_sorted_unique(self):
        H = random_planes(16, 8)
        cut = build_prisms(cached_level(H, 3), H)
        for prism in cut.prisms:
            assert list(prism.conflicts) == sorted(set(prism.conflicts))

    def test_json_dict_shape(self):
        H = random_planes(16, 8)
        cut = build_prisms(cached_level(H, 3), H)
        d = cut.to_json_dict()
        assert set(d) == {"vertices", "triangles", "conflicts", "params", "provenance"}
        assert len(d["conflicts"]) == len(d["triangles"])


class TestShallowCuttingExact:
    def test_pipeline_self_check(self, H60, cut60):
        rep = verify_shallow_cutting(cut60, H60, 10, 1)
        assert rep["ok"], rep["errors"][:4]
        assert rep["prisms"] == len(cut60.prisms)

    def test_conflict_bound(self, cut60):
        bound = (1 + 1) * 10
        assert max(len(p.conflicts) for p in cut60.prisms) <= bound

    def test_low_vertex_coverage(self, H60, cut60):
        rep = verify_shallow_cutting(cut60, H60, 10, 1)
        assert rep["low_vertices_covered"] == len(low_vertices(H60, 10))

    def test_fault_injection_names_vertex(self, H60, cut60):
        T = cut60.terrain
        vs = list(T.vertices)
        vs[0] = (vs[0][0], vs[0][1], vs[0][2] + 10**9)
        bad = dataclasses.replace(
            cut60,
            terrain=Terrain(
                vertices=vs,
                triangles=list(T.triangles),
                supporting_plane=list(T.supporting_plane),
                faces=[list(f) for f in T.faces],
                face_plane=list(T.face_plane),
                M=T.M,
                level=T.level,
            ),
        )
        rep = verify_shallow_cutting(bad, H60, 10, 1)
        assert not rep["ok"]
        assert any("vertex 0" in e for e in rep["errors"])

    def test_exact_level_as_own_cutting_eps0(self):
        # an exact L_k passes the sandwich and coverage checks with eps = 0;
        # the closed vertex test can exceed the bare bound k only by the few
        # planes crossing the top triangle (union over its three vertices)
        H = random_planes(20, 5)
        k = 6
        T = cached_level(H, k)
        cut = build_prisms(T, H)
        rep = verify_shallow_cutting(cut, H, k, 0)
        for e in rep["errors"]:
            assert "conflict list" in e
        assert max(len(p.conflicts) for p in cut.prisms) <= k + 6

    def test_level_out_of_range(self):
        H = random_planes(10, 2)
        with pytest.raises(ValueError):
            shallow_cutting_exact(H, 0, 1)
        with pytest.raises(ValueError):
            shallow_cutting_exact(H, 10, 1)


class TestShallowCuttingSampled:
    def test_degenerate_to_exact_path(self, H60):
        # default b makes n' >= n at this scale
        cut = shallow_cutting_sampled(H60, 10, Q(1, 2), seed=0)
        assert cut.provenance["kind"] == "exact"
        assert cut.provenance["reason"] == "sample >= n"

    def test_genuinely_sampled(self, H96):
        cut = shallow_cutting_sampled(H96, 16, 1, seed=1, b=0.03)
        assert cut.provenance["kind"] == "sampled"
        assert cut.provenance["sample_size"] < 96
        # the accepted terrain's vertices sit in the verified sandwich of H
        k_lo, k_hi = 16, 32
        for v in cut.terrain.vertices:
            lo = lift_to_level(H96, k_lo, (v[0], v[1]))[2]
            hi = lift_to_level(H96, k_hi, (v[0], v[1]))[2]
            assert lo <= v[2] <= hi

    def test_retry_statistic_and_size_fit(self, H96):
        totals = []
        for seed in (1, 2, 3):
            cut = shallow_cutting_sampled(H96, 16, 1, seed=seed, b=0.03)
            assert cut.provenance["retries"] <= 10
            totals.append(cut.conflict_total)
        # total conflict-list size <= C * n / eps^3 with one fitted C
        assert max(totals) <= 200 * 96

    def test_bad_arguments(self, H60):
        with pytest.raises(ValueError):
            shallow_cutting_sampled(H60, 10, 0)
        with pytest.raises(ValueError):
            shallow_cutting_sampled(H60, 0, 1)
