"""Pure-Python arrangement sweep kernels.

Planes arrive as integer 4-tuples (A, B, C, D), D > 0, encoding the plane
z = (A*x + B*y + C)/D.  For each plane pair the projected equal-height line is
swept; events are the crossings with the remaining planes (arrangement
vertices), tracked with an exact below-count.  Everything is integer
arithmetic; rational outputs are materialized only for emitted features.

The compiled kernel in _speed.pyx implements the same three entry points.
"""

from __future__ import annotations

import math
from functools import cmp_to_key


class KernelDegeneracyError(ValueError):
    """Input violates general position (detected exactly during a sweep)."""


def _fkey(tn: int, td: int) -> float:
    try:
        return tn / td
    except OverflowError:
        shift = max(tn.bit_length(), td.bit_length()) - 500
        return (tn >> shift) / (td >> shift)


def _pair_line(planes, i, j):
    Ai, Bi, Ci, Di = planes[i]
    Aj, Bj, Cj, Dj = planes[j]
    P = Ai * Dj - Aj * Di
    Qc = Bi * Dj - Bj * Di
    R = Ci * Dj - Cj * Di
    if P == 0 and Qc == 0:
        raise KernelDegeneracyError(f"planes {i} and {j} are parallel")
    dx, dy = -Qc, P
    if dx < 0 or (dx == 0 and dy < 0):
        dx, dy = -dx, -dy
    if Qc != 0:
        x0n, y0n, den = 0, -R, Qc
    else:
        x0n, y0n, den = -R, 0, P
    if den < 0:
        x0n, y0n, den = -x0n, -y0n, -den
    return dx, dy, x0n, y0n, den


def _events(planes, i, j, dx, dy, x0n, y0n, den):
    """Sweep events on line (i,j): returns (j0, events) with events sorted by
    parameter; each event is (tn, td, g, s) with td > 0 and s = sign of the
    crossing plane's growth along the sweep direction."""
    Ai, Bi, Ci, Di = planes[i]
    j0 = 0
    events = []
    for g, (Ag, Bg, Cg, Dg) in enumerate(planes):
        if g == i or g == j:
            continue
        ux = Ag * Di - Ai * Dg
        uy = Bg * Di - Bi * Dg
        uz = Cg * Di - Ci * Dg
        S = ux * dx + uy * dy
        V0 = ux * x0n + uy * y0n + uz * den
        if S == 0:
            if V0 == 0:
                raise KernelDegeneracyError(
                    f"planes {i},{j},{g} pass through a common line"
                )
            if (V0 < 0) != (den < 0):
                j0 += 1
            continue
        tn, td = -V0, S * den
        if td < 0:
            tn, td = -tn, -td
        if S > 0:
            j0 += 1
            events.append((tn, td, g, 1))
        else:
            events.append((tn, td, g, -1))

    if len(events) > 1:
        events.sort(key=lambda e: _fkey(e[0], e[1]))
        # exact verification of the float-keyed order, with exact re-sort if
        # the floats were too coarse
        exact = True
        for a, b in zip(events, events[1:]):
            c = a[0] * b[1] - b[0] * a[1]
            if c > 0:
                exact = False
                break
            if c == 0:
                raise KernelDegeneracyError(
                    f"four planes through one point (pair {i},{j}; "
                    f"crossings {a[2]},{b[2]})"
                )
        if not exact:
            events.sort(
                key=cmp_to_key(lambda a, b: (a[0] * b[1] > b[0] * a[1]) - (a[0] * b[1] < b[0] * a[1]))
            )
            for a, b in zip(events, events[1:]):
                if a[0] * b[1] == b[0] * a[1]:
                    raise KernelDegeneracyError(
                        f"four planes through one point (pair {i},{j}; "
                        f"crossings {a[2]},{b[2]})"
                    )
    return j0, events


def histogram(planes):
    """Level histogram over all arrangement vertices.

    Returns (hist, nevents, coord_bound) where hist[l] counts sweep events at
    vertex level l (every arrangement vertex contributes exactly 3 events, all
    with the same level), and coord_bound is a float upper bound on |x|, |y|
    over all vertices (0.0 when the arrangement has no vertex).
    """
    n = len(planes)
    hist = [0] * max(n, 1)
    nevents = 0
    bound = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            dx, dy, x0n, y0n, den = _pair_line(planes, i, j)
            j0, events = _events(planes, i, j, dx, dy, x0n, y0n, den)
            jcur = j0
            x0f = _fkey(x0n, den)
            y0f = _fkey(y0n, den)
            for tn, td, g, s in events:
                lvl = jcur - 1 if s > 0 else jcur
                hist[lvl] += 1
                jcur += -s
                nevents += 1
                tf = _fkey(tn, td)
                b = max(abs(x0f + tf * dx), abs(y0f + tf * dy))
                if b > bound:
                    bound = b
    return hist, nevents, bound


def level_edges(planes, k):
    """Breakline intervals of the k-level.

    For each pair line, emits the maximal constant-j intervals whose
    below-count j is k-1 or k (the pair then occupies heights of rank k+1 or
    k+2, so the (k+1)-st lowest plane switches across the line).  Each record
    is (i, j, jval, x0n, y0n, den, dx, dy, lo, hi) with lo/hi = (tn, td) or
    None for an unbounded end; points are p0 + t*(dx,dy), p0 = (x0n, y0n)/den.
    """
    n = len(planes)
    out = []
    for i in range(n):
        for j in range(i + 1, n):
            dx, dy, x0n, y0n, den = _pair_line(planes, i, j)
            j0, events = _events(planes, i, j, dx, dy, x0n, y0n, den)
            jcur = j0
            prev = None  # previous event param or None for -inf
            for tn, td, g, s in events:
                if jcur == k - 1 or jcur == k:
                    out.append(
                        (i, j, jcur, x0n, y0n, den, dx, dy, prev, (tn, td))
                    )
                jcur += -s
                prev = (tn, td)
            if jcur == k - 1 or jcur == k:
                out.append((i, j, jcur, x0n, y0n, den, dx, dy, prev, None))
    return out


def low_vertex_events(planes, kmax):
    """Arrangement vertices with level <= kmax, each emitted exactly once.

    Returns records (i, j, g, x0n, y0n, den, dx, dy, tn, td, level) with
    i < j < g the three incident planes.
    """
    n = len(planes)
    out = []
    for i in range(n):
        for j in range(i + 1, n):
            dx, dy, x0n, y0n, den = _pair_line(planes, i, j)
            j0, events = _events(planes, i, j, dx, dy, x0n, y0n, den)
            jcur = j0
            for tn, td, g, s in events:
                lvl = jcur - 1 if s > 0 else jcur
                if lvl <= kmax and g > j:
                    out.append((i, j, g, x0n, y0n, den, dx, dy, tn, td, lvl))
                jcur += -s
    return out


BACKEND = "pure"
