"""Confined triangulation of unions of convex regions."""

import math
import random

import pytest

from terracut import pdunion
from terracut.division import kappa_division, piece_polygon
from terracut.geom import (
    ConvexPolygon,
    clip_convex,
    convex_hull,
    orient2d,
    polygon_area2,
    segments_cross,
)
from terracut.pdunion import (
    ConfinedDecomposition,
    ConvexRegionSet,
    Crescent,
    confined_decomposition,
    decompose_crescent,
    fill_internal_holes,
    initial_state,
    insert_region,
    polygonalize,
    random_insertion_order,
    trapezoid_area2,
    union_area2,
    verify_confined,
)
from terracut.scalar import Q


def sq(x0, y0, s=1):
    x0, y0, s = Q(x0), Q(y0), Q(s)
    return ConvexPolygon(
        ((x0, y0), (x0 + s, y0), (x0 + s, y0 + s), (x0, y0 + s))
    )


def rand_regions(m, seed, spread=None, jitter=8):
    rng = random.Random(seed)
    spread = spread if spread is not None else max(4, int(8 * math.sqrt(m)))
    regs = []
    while len(regs) < m:
        cx = rng.randint(-spread, spread)
        cy = rng.randint(-spread, spread)
        pts = [
            (Q(cx + rng.randint(-jitter, jitter)), Q(cy + rng.randint(-jitter, jitter)))
            for _ in range(rng.randint(4, 10))
        ]
        h = convex_hull(pts)
        if not h.degenerate and len(h) >= 3:
            regs.append(h)
    return ConvexRegionSet(tuple(regs))


def run_insertions(D, order, seed=0):
    st = initial_state(D, seed=seed)
    for i in order:
        insert_region(st, i)
        polygonalize(st, i)
        fill_internal_holes(st, i)
        pdunion._triangulate_trapezoids(st, i)
    return st


class TestInsertionOrder:
    def test_single_region_identity(self):
        # [TRIVIAL]
        D = ConvexRegionSet((sq(0, 0),))
        assert random_insertion_order(D, 7) == [0]

    def test_deterministic_per_seed(self):
        # [TRIVIAL] same seed, same permutation, across repeated calls
        D = ConvexRegionSet(tuple(sq(3 * i, 0) for i in range(5)))
        first = random_insertion_order(D, 42)
        assert sorted(first) == list(range(5))
        for _ in range(5):
            assert random_insertion_order(D, 42) == first
        assert random_insertion_order(D, 43) != first

    def test_uniformity(self):
        # [DERIVED] 10^4 draws over m=4: every one of the 24 permutations
        # appears with frequency 1/24 within 3 sigma
        D = ConvexRegionSet(tuple(sq(3 * i, 0) for i in range(4)))
        counts = {}
        n = 10_000
        for s in range(n):
            p = tuple(random_insertion_order(D, s))
            counts[p] = counts.get(p, 0) + 1
        assert len(counts) == 24
        exp = n / 24
        sigma = math.sqrt(n * (1 / 24) * (23 / 24))
        for c in counts.values():
            assert abs(c - exp) <= 3 * sigma


class TestRegionSet:
    def test_rejects_degenerate(self):
        with pytest.raises(ValueError):
            ConvexRegionSet((((Q(0), Q(0)), (Q(1), Q(1)), (Q(2), Q(2))),))

    def test_pseudo_disk_mode_rejects_four_crossings(self):
        # a plus-shape: tall rectangle crossing a wide one four times
        tall = ConvexPolygon(
            ((Q(1), Q(-1)), (Q(2), Q(-1)), (Q(2), Q(4)), (Q(1), Q(4)))
        )
        wide = ConvexPolygon(
            ((Q(-1), Q(1)), (Q(4), Q(1)), (Q(4), Q(2)), (Q(-1), Q(2)))
        )
        with pytest.raises(ValueError):
            ConvexRegionSet((tall, wide), pseudo_disk_mode=True)
        # two crossings are fine
        ConvexRegionSet((sq(0, 0, 2), sq(1, "1/2", 2)), pseudo_disk_mode=True)

    def test_file_round_trip(self, tmp_path):
        D = ConvexRegionSet((sq(0, 0), sq("1/3", "-7/2", "5/2")))
        path = tmp_path / "regions.txt"
        D.to_file(path)
        E = ConvexRegionSet.from_file(path)
        assert [r.vertices for r in E.regions] == [r.vertices for r in D.regions]


class TestInsert:
    def test_first_insertion_single_trapezoid(self):
        # [PAPER] the first carved region is one degenerate pseudo-trapezoid
        # spanning its leftmost-to-rightmost points, with the region's area
        D = ConvexRegionSet((sq(0, 0), sq("1/2", "1/2")))
        st = initial_state(D, seed=0)
        insert_region(st, 0)
        traps = st.dzero[0]
        assert len(traps) == 1
        assert trapezoid_area2(st, traps[0]) == D.regions[0].area2()

    def test_second_square_area(self):
        # [DERIVED] two overlapping unit squares: the newly carved part has
        # area 1 - overlap, by exact trapezoid area sum
        D = ConvexRegionSet((sq(0, 0), sq("1/2", "1/2")))
        st = initial_state(D, seed=0)
        insert_region(st, 0)
        insert_region(st, 1)
        carved = sum((trapezoid_area2(st, t) for t in st.dzero[1]), Q(0))
        assert carved == Q(2) - Q(2) * Q(1, 4)  # area2 convention

    def test_covered_region_carves_nothing(self):
        # [TRIVIAL] a region inside the union adds no interior trapezoid
        D = ConvexRegionSet((sq(0, 0, 4), sq(1, 1)))
        st = initial_state(D, seed=0)
        insert_region(st, 0)
        insert_region(st, 1)
        assert st.dzero[1] == []

    def test_double_insert_rejected(self):
        D = ConvexRegionSet((sq(0, 0),))
        st = initial_state(D, seed=0)
        insert_region(st, 0)
        with pytest.raises(ValueError):
            insert_region(st, 0)


class TestPolygonalize:
    def test_fresh_sides_are_chords(self):
        # [TRIVIAL] a lone square's boundary arcs chain to plain chords
        D = ConvexRegionSet((sq(0, 0), sq(5, 5)))
        st = initial_state(D, seed=0)
        insert_region(st, 0)
        produced = polygonalize(st, 0)
        assert len(produced) == 2  # one bottom, one top arc
        for _key, _a, _b, chain in produced:
            assert len(chain) == 2

    def test_untouched_arcs_unchanged(self):
        # [TRIVIAL] inserting a far-away region leaves prior chains as-is
        D = ConvexRegionSet((sq(0, 0), sq(10, 10)))
        st = run_insertions(D, [0])
        before = {
            k: [(e.xl, e.xr, tuple(map(tuple, e.chain))) for e in v]
            for k, v in st.arcs.items()
            if k[0] == 0
        }
        insert_region(st, 1)
        polygonalize(st, 1)
        after = {
            k: [(e.xl, e.xr, tuple(map(tuple, e.chain))) for e in v]
            for k, v in st.arcs.items()
            if k[0] == 0
        }
        assert before == after

    def test_chains_convex_monotone_empty(self):
        # [DERIVED] on small instances every produced chain is x-monotone,
        # convex toward its side, shares endpoints with its arc, and the
        # region between arc and chain holds no inserted-region vertex
        for m, seed in [(2, 0), (4, 1), (7, 2)]:
            D = rand_regions(m, 100 + seed, spread=8)
            order = random_insertion_order(D, seed)
            st = initial_state(D, seed=seed)
            for i in order:
                insert_region(st, i)
                produced = polygonalize(st, i)
                chain_verts = {
                    p
                    for entries in st.arcs.values()
                    for e in entries
                    for p in e.chain
                }
                for key, a, b, chain in produced:
                    reg, side = key
                    rc = st.regions[reg].chain(side)
                    arc = pdunion._chain_clip(rc, a, b)
                    assert all(
                        p[0] < q[0] for p, q in zip(chain, chain[1:])
                    )
                    assert chain[0] == arc[0] and chain[-1] == arc[-1]
                    want = -1 if side == "top" else 1
                    for u, v, w in zip(chain, chain[1:], chain[2:]):
                        assert orient2d(u, v, w) == want or orient2d(u, v, w) == 0
                    for p in chain_verts:
                        if not a < p[0] < b:
                            continue
                        cy = pdunion._chain_y(chain, p[0])
                        ay = pdunion._chain_y(arc, p[0])
                        lo, hi = min(cy, ay), max(cy, ay)
                        assert not (lo < p[1] < hi)
                fill_internal_holes(st, i)
                pdunion._triangulate_trapezoids(st, i)

    def test_no_chain_segments_cross(self):
        # [DERIVED] invariant: emitted chain segments never cross each other
        D = rand_regions(5, 9, spread=6)
        order = random_insertion_order(D, 3)
        st = initial_state(D, seed=3)
        for i in order:
            insert_region(st, i)
            polygonalize(st, i)
            fill_internal_holes(st, i)
            pdunion._triangulate_trapezoids(st, i)
            segs = [
                (p, q)
                for entries in st.arcs.values()
                for e in entries
                for p, q in zip(e.chain, e.chain[1:])
            ]
            for a in range(len(segs)):
                for b in range(a + 1, len(segs)):
                    assert not segments_cross(*segs[a], *segs[b])


def crescent_cycle(cr):
    return list(cr.chain) + list(cr.arc[-2:0:-1])


def crescent_tiles_exactly(cr, tris, caps):
    """Exact area identity: triangles plus halfplane-clipped crescent caps
    tile the crescent."""
    cycle = crescent_cycle(cr)
    target = abs(polygon_area2(cycle))
    covered = sum((abs(polygon_area2(t)) for t in tris), Q(0))
    for _owner, hp in caps:
        piece = clip_convex(cycle, hp)
        if len(piece) >= 3:
            covered += abs(polygon_area2(piece))
    return covered == target


class TestCrescents:
    def arc(self):
        return [(Q(0), Q(0)), (Q(1), Q(2)), (Q(3), Q(2)), (Q(4), Q(0))]

    def test_t2_single_cap(self):
        # [TRIVIAL] a chord chain yields no triangle and one cap
        cr = Crescent(0, self.arc(), [self.arc()[0], self.arc()[-1]])
        tris, caps = decompose_crescent(cr)
        assert tris == [] and len(caps) == 1
        assert crescent_tiles_exactly(cr, tris, caps)

    def test_t3_counts(self):
        # [PAPER] t=3: exactly one triangle and at most two caps
        chain = [(Q(0), Q(0)), (Q(2), Q(1)), (Q(4), Q(0))]
        cr = Crescent(0, self.arc(), chain)
        tris, caps = decompose_crescent(cr)
        assert len(tris) == 1 and len(caps) <= 2
        assert all(polygon_area2(t) > 0 for t in tris)
        assert crescent_tiles_exactly(cr, tris, caps)

    def test_t10_counts_and_tiling(self):
        # [DERIVED] t=10: exactly 8 triangles, at most 9 caps, and the pieces
        # tile the crescent exactly (area identity over clipped halfplanes)
        arc = [(Q(x), Q(100 - x * x, 2)) for x in (-10, -7, -4, -1, 2, 5, 8, 10)]
        chain = [
            (Q(x), Q(100 - x * x, 4))
            for x in (-10, -8, -6, -3, 0, 2, 4, 6, 8, 10)
        ]
        cr = Crescent(0, arc, chain)
        tris, caps = decompose_crescent(cr)
        assert len(tris) == 8
        assert len(caps) <= 9
        assert all(polygon_area2(t) > 0 for t in tris)
        assert crescent_tiles_exactly(cr, tris, caps)

    def test_bottom_side_orientation(self):
        # [DERIVED] a mirrored (bottom-side) crescent fans clockwise
        # internally; emitted triangles must still be counterclockwise
        arc = [(Q(x), -Q(100 - x * x, 2)) for x in (-10, -7, -4, -1, 2, 5, 8, 10)]
        chain = [
            (Q(x), -Q(100 - x * x, 4))
            for x in (-10, -8, -6, -3, 0, 2, 4, 6, 8, 10)
        ]
        cr = Crescent(0, arc, chain)
        tris, caps = decompose_crescent(cr)
        assert len(tris) == 8
        assert all(polygon_area2(t) > 0 for t in tris)
        assert crescent_tiles_exactly(cr, tris, caps)

    def test_seeded_crescent_counts(self):
        # [DERIVED] random concave chains under a parabolic arc: always
        # exactly t-2 triangles and at most t-1 caps, tiling exactly
        rng = random.Random(12)
        for _ in range(20):
            t = rng.randint(2, 12)
            axs = sorted(
                set([-20, -10, 0, 10, 20] + rng.sample(range(-19, 20), rng.randint(0, 5)))
            )
            arc = [(Q(x), Q(400 - x * x, 2)) for x in axs]
            xs = sorted(rng.sample(range(-19, 20), t - 2) + [-20, 20])
            den = rng.randint(4, 9)
            chain = [(Q(x), Q(400 - x * x, den)) for x in xs]
            cr = Crescent(0, arc, chain)
            tris, caps = decompose_crescent(cr)
            assert len(tris) == len(chain) - 2
            assert len(caps) <= len(chain) - 1
            assert crescent_tiles_exactly(cr, tris, caps)


class TestUnionArea:
    def test_two_squares(self):
        # [DERIVED] independent boundary-integral union area
        D = ConvexRegionSet((sq(0, 0), sq("1/2", "1/2")))
        assert union_area2(D) == 2 * (Q(2) - Q(1, 4))

    def test_nested(self):
        D = ConvexRegionSet((sq(0, 0, 4), sq(1, 1)))
        assert union_area2(D) == Q(32)

    def test_shared_edge(self):
        # duplicated boundary portions must be counted exactly once
        D = ConvexRegionSet((sq(0, 0), sq(1, 0)))
        assert union_area2(D) == Q(4)


class TestConfined:
    def test_single_polygon(self):
        # [TRIVIAL] one convex polygon is covered exactly by its own pieces
        pent = ConvexPolygon(
            (
                (Q(0), Q(0)),
                (Q(4), Q(-1)),
                (Q(6), Q(2)),
                (Q(3), Q(5)),
                (Q(-1), Q(2)),
            )
        )
        D = ConvexRegionSet((pent,))
        dec = confined_decomposition(D, seed=0)
        rep = verify_confined(dec, D)
        assert rep["ok"], rep["errors"]
        assert all(o == 0 for _t, o in dec.triangles)
        assert all(c.owner == 0 for c in dec.caps)

    def test_three_disks(self):
        # [PAPER] three pairwise-overlapping round polygons (the classic
        # three-disk configuration) admit a valid confined decomposition
        def disk(cx, cy):
            pts = []
            for k in range(12):
                a = 2 * math.pi * k / 12
                pts.append(
                    (
                        Q(cx) + Q(round(1000 * math.cos(a + 0.1)), 500),
                        Q(cy) + Q(round(1000 * math.sin(a + 0.1)), 500),
                    )
                )
            return convex_hull(pts)

        D = ConvexRegionSet(
            (disk(0, 0), disk(2, 0), disk(1, Q(17, 10))), pseudo_disk_mode=True
        )
        for seed in range(3):
            dec = confined_decomposition(D, seed=seed)
            rep = verify_confined(dec, D)
            assert rep["ok"], rep["errors"]

    def test_two_squares_all_seeds(self):
        D = ConvexRegionSet((sq(0, 0, 2), sq(1, 1, 2)))
        for seed in range(6):
            dec = confined_decomposition(D, seed=seed)
            rep = verify_confined(dec, D)
            assert rep["ok"], rep["errors"]

    def test_batch_seeded_pipelines(self):
        # [DERIVED] seeded random instances all pass the exact validator
        for m, base in [(3, 0), (6, 10), (10, 20), (16, 30)]:
            for seed in range(3):
                D = rand_regions(m, 1000 * m + base + seed)
                dec = confined_decomposition(D, seed=seed)
                rep = verify_confined(dec, D)
                assert rep["ok"], (m, seed, rep["errors"][:3])

    def test_linear_piece_count(self):
        # [DERIVED] pieces per region stays bounded as m grows
        ratios = []
        for m in (20, 40, 80):
            D = rand_regions(m, m)
            dec = confined_decomposition(D, seed=1)
            assert verify_confined(dec, D)["ok"]
            ratios.append(dec.piece_count / m)
        assert max(ratios) <= 40

    def test_division_hulls(self, graph40):
        # [DERIVED] hulls of a planar-division's pieces (the downstream
        # consumer shape) decompose and validate
        pieces = kappa_division(graph40, 36)
        hulls = []
        for piece in pieces:
            res = piece_polygon(graph40, piece)
            if res is None:
                continue
            outer, _holes = res
            h = convex_hull([(v[0], v[1]) for v in outer])
            if not h.degenerate and len(h) >= 3:
                hulls.append(h)
        D = ConvexRegionSet(tuple(hulls))
        dec = confined_decomposition(D, seed=3)
        rep = verify_confined(dec, D)
        assert rep["ok"], rep["errors"][:3]
        assert dec.piece_count <= 40 * len(D.regions)

    def test_json_round_trippable(self):
        D = ConvexRegionSet((sq(0, 0, 2), sq(1, 1, 2)))
        dec = confined_decomposition(D, seed=0)
        doc = dec.to_json_dict()
        assert doc["m"] == 2
        assert len(doc["triangles"]) == len(dec.triangles)
        assert len(doc["caps"]) == len(dec.caps)


class TestVerifier:
    def test_fault_injection_owner(self):
        # [TRIVIAL] corrupting one triangle's owner is detected and the
        # offending triangle is named
        D = ConvexRegionSet((sq(0, 0, 2), sq(1, 1, 2)))
        dec = confined_decomposition(D, seed=0)
        assert verify_confined(dec, D)["ok"]
        tris = list(dec.triangles)
        idx = next(
            i
            for i, (t, o) in enumerate(tris)
            if any(D.regions[1 - o].contains(v) < 0 for v in t)
        )
        t, o = tris[idx]
        tris[idx] = (t, 1 - o)
        bad = ConfinedDecomposition(
            m=dec.m, triangles=tuple(tris), caps=dec.caps, stats=dec.stats
        )
        rep = verify_confined(bad, D)
        assert not rep["ok"]
        assert any(f"triangle {idx}" in e for e in rep["errors"])

    def test_fault_injection_duplicate(self):
        # duplicating a piece breaks both disjointness and the area identity
        D = ConvexRegionSet((sq(0, 0, 2), sq(1, 1, 2)))
        dec = confined_decomposition(D, seed=1)
        bad = ConfinedDecomposition(
            m=dec.m,
            triangles=dec.triangles + dec.triangles[:1],
            caps=dec.caps,
            stats=dec.stats,
        )
        rep = verify_confined(bad, D)
        assert not rep["ok"]
