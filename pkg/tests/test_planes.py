"""PlaneSet validation, histogram accounting, and file round-trip."""

import math

import pytest

from terracut.geom import DegeneracyError, Plane
from terracut.planes import PlaneSet
from terracut.scalar import Q


class TestValidation:
    def test_parallel_rejected(self):
        with pytest.raises(DegeneracyError):
            PlaneSet([Plane(Q(1), Q(2), Q(0)), Plane(Q(1), Q(2), Q(5))])

    def test_strict_counts_all_triples(self, planes20):
        # [DERIVED] strict general position makes every triple meet in a vertex
        planes20.validate_full(strict=True)
        assert planes20.n_vertices == math.comb(20, 3)

    def test_histogram_incidences(self, planes12):
        # [DERIVED] each arrangement vertex lies at one level, counted once
        hist = planes12.histogram()
        assert sum(hist) == math.comb(12, 3)
        assert all(c >= 0 for c in hist)

    def test_level_complexity_window(self, planes12):
        # a vertex at level l belongs to levels l, l+1, l+2
        hist = planes12.histogram()
        for k in range(12):
            expect = sum(
                hist[j] for j in range(max(k - 2, 0), k + 1) if j < len(hist)
            )
            assert planes12.level_complexity(k) == expect

    def test_box_bounds_vertices(self, planes12):
        M = planes12.box_size()
        assert M == Q(2) ** (M.numerator.bit_length() - 1)  # power of two


class TestIO:
    def test_round_trip(self, tmp_path, planes12):
        p = tmp_path / "h.txt"
        planes12.to_file(p)
        H2 = PlaneSet.from_file(p)
        assert [(h.a, h.b, h.c) for h in H2.planes] == [
            (h.a, h.b, h.c) for h in planes12.planes
        ]

    def test_rationals_and_comments(self, tmp_path):
        p = tmp_path / "h.txt"
        p.write_text("# comment\n1/3 -7/2 0\n2 5 1/9  # trailing\n")
        H = PlaneSet.from_file(p)
        assert H.planes[0].a == Q(1, 3)
        assert H.planes[0].b == Q(-7, 2)
        assert H.planes[1].c == Q(1, 9)
