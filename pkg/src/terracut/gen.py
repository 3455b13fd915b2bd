"""Seeded random instance generation with general-position rejection."""

from __future__ import annotations

import random

from terracut.geom import DegeneracyError, Plane
from terracut.planes import PlaneSet
from terracut.scalar import Q


def random_planes(
    n: int,
    seed: int,
    coef_range: int = 9999,
    strict: bool = True,
    max_tries: int = 50,
) -> PlaneSet:
    """n integer-coefficient planes in verified general position.

    Degenerate draws (exact coincidences do happen on the integer grid) are
    rejected wholesale and redrawn from the same generator stream.
    """
    if n < 1:
        raise ValueError("n must be positive")
    rng = random.Random(seed)
    for _ in range(max_tries):
        used = set()
        planes = []
        while len(planes) < n:
            a = rng.randint(-coef_range, coef_range)
            b = rng.randint(-coef_range, coef_range)
            if (a, b) in used:
                continue
            used.add((a, b))
            c = rng.randint(-coef_range, coef_range)
            planes.append(Plane(Q(a), Q(b), Q(c)))
        try:
            H = PlaneSet(planes)
            if strict and n >= 3:
                H.validate_full(strict=True)
            return H
        except DegeneracyError:
            continue
    raise DegeneracyError(
        f"could not draw {n} planes in general position after {max_tries} tries"
    )
