"""Plane sets with general-position validation and cached sweep results."""

from __future__ import annotations

import math
from typing import List, Optional, Sequence

from terracut import kernels
from terracut.geom import DegeneracyError, Plane
from terracut.kernels import KernelDegeneracyError
from terracut.scalar import Q, format_rational, parse_rational

# below this size the O(n^3 log n) full general-position sweep runs eagerly at
# construction; larger sets are checked on their first sweep
_EAGER_FULL_CHECK = 80


def _lcm(a: int, b: int) -> int:
    return a // math.gcd(a, b) * b


class PlaneSet:
    """Immutable set of non-vertical planes in general position.

    Pairwise parallelism is rejected at construction; deeper degeneracies
    (three planes through a line, four through a point) are detected exactly
    by the sweep kernels, eagerly for small sets.
    """

    def __init__(self, planes: Sequence[Plane], validate: bool = True):
        self.planes: List[Plane] = [
            Plane(Q(h.a), Q(h.b), Q(h.c)) for h in planes
        ]
        self.n = len(self.planes)
        self.int_coeffs = []
        for h in self.planes:
            d = _lcm(
                _lcm(h.a.denominator, h.b.denominator), h.c.denominator
            )
            self.int_coeffs.append(
                (
                    int(h.a.numerator * (d // h.a.denominator)),
                    int(h.b.numerator * (d // h.b.denominator)),
                    int(h.c.numerator * (d // h.c.denominator)),
                    int(d),
                )
            )
        self._hist = None
        self._box = None
        self._level_cache = {}
        if validate:
            self._check_pairwise()
            if self.n <= _EAGER_FULL_CHECK:
                self.histogram()  # raises DegeneracyError on deep degeneracy

    def _check_pairwise(self):
        seen = {}
        for idx, h in enumerate(self.planes):
            key = (h.a, h.b)
            if key in seen:
                raise DegeneracyError(
                    f"planes {seen[key]} and {idx} are parallel"
                )
            seen[key] = idx

    # -- cached sweep products ------------------------------------------------

    def histogram(self):
        """Per-level arrangement-vertex counts (hist[l] = vertices at level l)."""
        if self._hist is None:
            try:
                events, nevents, bound = kernels.histogram(self.int_coeffs)
            except KernelDegeneracyError as e:
                raise DegeneracyError(str(e)) from e
            if nevents % 3:
                raise DegeneracyError(
                    "vertex incidence count not divisible by 3"
                )
            hist = []
            for c in events:
                if c % 3:
                    raise DegeneracyError(
                        "level histogram entry not divisible by 3"
                    )
                hist.append(c // 3)
            self._hist = hist
            self._bound = bound
        return self._hist

    @property
    def n_vertices(self) -> int:
        return sum(self.histogram())

    def box_size(self):
        """Half-width M of the universe box [-M, M]^2: a power of two at least
        twice the largest |coordinate| of any arrangement vertex."""
        if self._box is None:
            self.histogram()
            b = max(self._bound, 1.0)
            self._box = Q(2 ** (max(math.frexp(b)[1], 1) + 1))
        return self._box

    def level_complexity(self, k: int) -> int:
        """Vertex count of the (untriangulated) k-level: an arrangement vertex
        at level l belongs to levels l, l+1 and l+2."""
        hist = self.histogram()
        return sum(hist[j] for j in range(max(k - 2, 0), k + 1) if j < len(hist))

    def validate_full(self, strict: bool = False):
        """Run the exact sweep degeneracy checks.

        strict additionally requires every plane triple to meet in a vertex
        (rejects a pair's projected line being parallel to a third plane),
        which makes the total vertex count exactly C(n,3)."""
        self.histogram()
        if strict:
            expect = self.n * (self.n - 1) * (self.n - 2) // 6
            if self.n_vertices != expect:
                raise DegeneracyError(
                    f"{expect - self.n_vertices} plane triples have no common "
                    "vertex (projected pair line parallel to the third plane)"
                )

    # -- io -------------------------------------------------------------------

    @classmethod
    def from_file(cls, path) -> "PlaneSet":
        planes = []
        with open(path) as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                a, b, c = (parse_rational(tok) for tok in line.split())
                planes.append(Plane(a, b, c))
        return cls(planes)

    def to_file(self, path):
        with open(path, "w") as fh:
            fh.write(f"# {self.n} planes, z = a*x + b*y + c\n")
            for h in self.planes:
                fh.write(
                    f"{format_rational(h.a)} {format_rational(h.b)} "
                    f"{format_rational(h.c)}\n"
                )
