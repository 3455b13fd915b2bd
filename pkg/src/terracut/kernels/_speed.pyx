# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled arrangement sweep kernels (same API as _pure).

Fixed-width fast path: with |coefficient| <= 20000 the event parameters are
degree-4 integer products (< 2^63) and their pairwise comparisons fit in
__int128, so every predicate is exact.  The dispatcher in kernels/__init__
routes bigger inputs to the pure kernel.
"""

from libc.stdlib cimport free, malloc

from terracut.kernels._pure import KernelDegeneracyError

cdef extern from *:
    ctypedef long long i128 "__int128"

ctypedef long long ll

cdef struct Ev:
    ll rn      # event parameter numerator (actual t = rn / (rd * den))
    ll rd      # positive denominator part (den factored out per line)
    int g
    int s      # +1 if the crossing plane grows along the sweep direction
    double key


cdef int _exact_cmp(Ev a, Ev b) nogil:
    cdef i128 lhs = (<i128> a.rn) * b.rd
    cdef i128 rhs = (<i128> b.rn) * a.rd
    if lhs < rhs:
        return -1
    if lhs > rhs:
        return 1
    return 0


cdef void _sort_events(Ev* ev, int ne) nogil:
    # insertion sort on the double key; exactness is restored by the caller's
    # verification pass (event lists are a few hundred entries)
    cdef int i, j
    cdef Ev tmp
    for i in range(1, ne):
        tmp = ev[i]
        j = i - 1
        while j >= 0 and ev[j].key > tmp.key:
            ev[j + 1] = ev[j]
            j -= 1
        ev[j + 1] = tmp


cdef void _exact_fix(Ev* ev, int ne) nogil:
    # bubble passes with the exact comparator; floats only mis-order
    # near-ties, so this terminates almost immediately
    cdef int i
    cdef bint dirty = True
    cdef Ev tmp
    while dirty:
        dirty = False
        for i in range(ne - 1):
            if _exact_cmp(ev[i], ev[i + 1]) > 0:
                tmp = ev[i]
                ev[i] = ev[i + 1]
                ev[i + 1] = tmp
                dirty = True


cdef class _Coeffs:
    cdef ll* A
    cdef ll* B
    cdef ll* C
    cdef ll* D
    cdef int n

    def __cinit__(self, planes):
        cdef int i
        self.n = len(planes)
        self.A = <ll*> malloc(self.n * sizeof(ll))
        self.B = <ll*> malloc(self.n * sizeof(ll))
        self.C = <ll*> malloc(self.n * sizeof(ll))
        self.D = <ll*> malloc(self.n * sizeof(ll))
        for i in range(self.n):
            self.A[i] = planes[i][0]
            self.B[i] = planes[i][1]
            self.C[i] = planes[i][2]
            self.D[i] = planes[i][3]

    def __dealloc__(self):
        free(self.A)
        free(self.B)
        free(self.C)
        free(self.D)


cdef struct Line:
    ll dx
    ll dy
    ll x0n
    ll y0n
    ll den


cdef int _setup_line(_Coeffs co, int i, int j, Line* L) except -1:
    cdef ll P = co.A[i] * co.D[j] - co.A[j] * co.D[i]
    cdef ll Qc = co.B[i] * co.D[j] - co.B[j] * co.D[i]
    cdef ll R = co.C[i] * co.D[j] - co.C[j] * co.D[i]
    if P == 0 and Qc == 0:
        raise KernelDegeneracyError(f"planes {i} and {j} are parallel")
    L.dx = -Qc
    L.dy = P
    if L.dx < 0 or (L.dx == 0 and L.dy < 0):
        L.dx = -L.dx
        L.dy = -L.dy
    if Qc != 0:
        L.x0n = 0
        L.y0n = -R
        L.den = Qc
    else:
        L.x0n = -R
        L.y0n = 0
        L.den = P
    if L.den < 0:
        L.x0n = -L.x0n
        L.y0n = -L.y0n
        L.den = -L.den
    return 0


cdef int _fill_events(_Coeffs co, int i, int j, Line* L, Ev* ev,
                      int* j0_out) except -1:
    cdef int g, ne = 0, j0 = 0
    cdef ll ux, uy, uz, S, V0
    for g in range(co.n):
        if g == i or g == j:
            continue
        ux = co.A[g] * co.D[i] - co.A[i] * co.D[g]
        uy = co.B[g] * co.D[i] - co.B[i] * co.D[g]
        uz = co.C[g] * co.D[i] - co.C[i] * co.D[g]
        S = ux * L.dx + uy * L.dy
        V0 = ux * L.x0n + uy * L.y0n + uz * L.den
        if S == 0:
            if V0 == 0:
                raise KernelDegeneracyError(
                    f"planes {i},{j},{g} pass through a common line")
            if V0 < 0:
                j0 += 1
            continue
        if S > 0:
            j0 += 1
            ev[ne].rn = -V0
            ev[ne].rd = S
            ev[ne].s = 1
        else:
            ev[ne].rn = V0
            ev[ne].rd = -S
            ev[ne].s = -1
        ev[ne].g = g
        ev[ne].key = (<double> ev[ne].rn) / (<double> ev[ne].rd)
        ne += 1
    if ne > 1:
        _sort_events(ev, ne)
        _exact_fix(ev, ne)
        for g in range(ne - 1):
            if _exact_cmp(ev[g], ev[g + 1]) == 0:
                raise KernelDegeneracyError(
                    f"four planes through one point (pair {i},{j}; "
                    f"crossings {ev[g].g},{ev[g + 1].g})")
    j0_out[0] = j0
    return ne


def histogram(planes):
    cdef _Coeffs co = _Coeffs(planes)
    cdef int n = co.n
    cdef Ev* ev = <Ev*> malloc(max(n, 1) * sizeof(Ev))
    cdef long* hist = <long*> malloc(max(n, 1) * sizeof(long))
    cdef int i, j, e, ne, j0, lvl
    cdef long nevents = 0
    cdef double bound = 0.0, x0f, y0f, tf, bx, by
    cdef Line L
    for i in range(max(n, 1)):
        hist[i] = 0
    try:
        for i in range(n):
            for j in range(i + 1, n):
                _setup_line(co, i, j, &L)
                ne = _fill_events(co, i, j, &L, ev, &j0)
                x0f = (<double> L.x0n) / (<double> L.den)
                y0f = (<double> L.y0n) / (<double> L.den)
                for e in range(ne):
                    lvl = j0 - 1 if ev[e].s > 0 else j0
                    hist[lvl] += 1
                    j0 -= ev[e].s
                    nevents += 1
                    tf = ev[e].key / (<double> L.den)
                    bx = x0f + tf * L.dx
                    by = y0f + tf * L.dy
                    if bx < 0:
                        bx = -bx
                    if by < 0:
                        by = -by
                    if bx > bound:
                        bound = bx
                    if by > bound:
                        bound = by
        return [hist[i] for i in range(max(n, 1))], nevents, bound
    finally:
        free(ev)
        free(hist)


def level_edges(planes, k):
    cdef _Coeffs co = _Coeffs(planes)
    cdef int n = co.n
    cdef Ev* ev = <Ev*> malloc(max(n, 1) * sizeof(Ev))
    cdef int i, j, e, ne, jcur, j0, kk = k
    cdef Line L
    cdef object prev, t
    out = []
    try:
        for i in range(n):
            for j in range(i + 1, n):
                _setup_line(co, i, j, &L)
                ne = _fill_events(co, i, j, &L, ev, &j0)
                jcur = j0
                prev = None
                for e in range(ne):
                    t = (int(ev[e].rn), int(ev[e].rd) * int(L.den))
                    if jcur == kk - 1 or jcur == kk:
                        out.append((i, j, jcur, int(L.x0n), int(L.y0n),
                                    int(L.den), int(L.dx), int(L.dy),
                                    prev, t))
                    jcur -= ev[e].s
                    prev = t
                if jcur == kk - 1 or jcur == kk:
                    out.append((i, j, jcur, int(L.x0n), int(L.y0n),
                                int(L.den), int(L.dx), int(L.dy), prev, None))
        return out
    finally:
        free(ev)


def low_vertex_events(planes, kmax):
    cdef _Coeffs co = _Coeffs(planes)
    cdef int n = co.n
    cdef Ev* ev = <Ev*> malloc(max(n, 1) * sizeof(Ev))
    cdef int i, j, e, ne, jcur, j0, lvl, km = kmax
    cdef Line L
    out = []
    try:
        for i in range(n):
            for j in range(i + 1, n):
                _setup_line(co, i, j, &L)
                ne = _fill_events(co, i, j, &L, ev, &j0)
                jcur = j0
                for e in range(ne):
                    lvl = jcur - 1 if ev[e].s > 0 else jcur
                    if lvl <= km and ev[e].g > j:
                        out.append((i, j, ev[e].g, int(L.x0n), int(L.y0n),
                                    int(L.den), int(L.dx), int(L.dy),
                                    int(ev[e].rn),
                                    int(ev[e].rd) * int(L.den), lvl))
                    jcur -= ev[e].s
        return out
    finally:
        free(ev)


BACKEND = "compiled"
