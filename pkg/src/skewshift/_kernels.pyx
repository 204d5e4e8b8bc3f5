# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: skew-shift transfer products and Sturm counts.

Mirrors ``_fallback`` function for function and bit for bit. Phases are
64-bit fixed-point turns and the cosine is the table/polynomial scheme of
``_trig``. Products are renormalized by exact powers of two, so the result
does not depend on when renormalization happens. The per-step work lives in
``_core.h``: points advance in groups of ``SS_LANES`` and the orbit in blocks
of ``SS_BLOCK`` steps.
"""

import numpy as np

from libc.math cimport fabs, copysign
from libc.stdint cimport uint64_t, int64_t

from . import _trig

cdef extern from "_core.h" nogil:
    int SS_LANES
    int SS_BLOCK
    ctypedef struct ss_trig:
        const double *cos_t
        const double *sin_t
        double delta_scale
        double c2, c4, c6, s3, s5, s7
    ctypedef struct ss_group:
        double m00[8]
        double m01[8]
        double m10[8]
        double m11[8]
        int64_t expo[8]
    double ss_cos_turn(uint64_t phase, const ss_trig *tr)
    void ss_load(ss_group *g, const uint64_t *xs, const uint64_t *ys,
                 int64_t start, int64_t count)
    void ss_advance(ss_group *g, int steps, uint64_t omega, double lam,
                    double energy, double hi2, double lo2, const ss_trig *tr)
    ctypedef struct ss_group_dd:
        double h00[8]
        double h01[8]
        double h10[8]
        double h11[8]
        double l00[8]
        double l01[8]
        double l10[8]
        double l11[8]
        int64_t expo[8]
    void ss_load_dd(ss_group_dd *g, const uint64_t *xs, const uint64_t *ys,
                    int64_t start, int64_t count)
    void ss_advance_dd(ss_group_dd *g, int steps, uint64_t omega, double lam,
                       double energy, double hi2, double lo2, const ss_trig *tr)

DEF LANES = 8
DEF TABLE_SIZE = 256

cdef double PIVOT_FLOOR = 1e-300
cdef double LN2 = 0.6931471805599453

cdef double COS_T[TABLE_SIZE]
cdef double SIN_T[TABLE_SIZE]
for _k in range(TABLE_SIZE):
    COS_T[_k] = _trig.COS_TABLE[_k]
    SIN_T[_k] = _trig.SIN_TABLE[_k]

cdef ss_trig TRIG
TRIG.cos_t = COS_T
TRIG.sin_t = SIN_T
TRIG.delta_scale = _trig.DELTA_SCALE
TRIG.c2 = _trig.C2
TRIG.c4 = _trig.C4
TRIG.c6 = _trig.C6
TRIG.s3 = _trig.S3
TRIG.s5 = _trig.S5
TRIG.s7 = _trig.S7
assert SS_LANES == LANES


def potential_sequence(uint64_t x, uint64_t y, uint64_t omega, Py_ssize_t n):
    """v_1..v_n along the orbit of (x, y)."""
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] v = out
    cdef uint64_t X = x, Y = y
    cdef Py_ssize_t j
    with nogil:
        for j in range(n):
            X += Y
            Y += omega
            v[j] = 2.0 * ss_cos_turn(X, &TRIG)
    return out


def products(const uint64_t[::1] xs, const uint64_t[::1] ys, uint64_t omega,
             double lam, double energy, const int64_t[::1] scales,
             double renorm=2.0):
    """Scaled transfer products at each requested scale for every point.

    Returns ``(m, log_scale)`` with shapes ``(S, P, 4)`` and ``(S, P)``;
    entries of ``m`` are row-major ``m00, m01, m10, m11``.
    """
    cdef Py_ssize_t P = xs.shape[0]
    cdef Py_ssize_t S = scales.shape[0]
    m_out = np.empty((S, P, 4), dtype=np.float64)
    ls_out = np.empty((S, P), dtype=np.float64)
    cdef double[:, :, ::1] mo = m_out
    cdef double[:, ::1] lo = ls_out
    cdef double hi2 = renorm * renorm
    cdef double lo2 = 1.0 / hi2
    cdef ss_group grp
    cdef Py_ssize_t g, l, k
    cdef int64_t j, target, steps

    if S == 0 or P == 0:
        return m_out, ls_out
    with nogil:
        for g in range(0, P, LANES):
            ss_load(&grp, &xs[0], &ys[0], g, min(LANES, P - g))
            j = 0
            for k in range(S):
                target = scales[k]
                while j < target:
                    steps = target - j
                    if steps > SS_BLOCK:
                        steps = SS_BLOCK
                    ss_advance(&grp, <int>steps, omega, lam, energy, hi2, lo2, &TRIG)
                    j += steps
                for l in range(min(LANES, P - g)):
                    mo[k, g + l, 0] = grp.m00[l]
                    mo[k, g + l, 1] = grp.m01[l]
                    mo[k, g + l, 2] = grp.m10[l]
                    mo[k, g + l, 3] = grp.m11[l]
                    lo[k, g + l] = grp.expo[l] * LN2
    return m_out, ls_out


def products_dd(const uint64_t[::1] xs, const uint64_t[::1] ys, uint64_t omega,
                double lam, double energy, const int64_t[::1] scales,
                double renorm=2.0):
    """Like ``products`` with double-double accumulation; returns the rounded hi parts."""
    cdef Py_ssize_t P = xs.shape[0]
    cdef Py_ssize_t S = scales.shape[0]
    m_out = np.empty((S, P, 4), dtype=np.float64)
    ls_out = np.empty((S, P), dtype=np.float64)
    cdef double[:, :, ::1] mo = m_out
    cdef double[:, ::1] lo = ls_out
    cdef double hi2 = renorm * renorm
    cdef double lo2 = 1.0 / hi2
    cdef ss_group_dd grp
    cdef Py_ssize_t g, l, k
    cdef int64_t j, target, steps

    if S == 0 or P == 0:
        return m_out, ls_out
    with nogil:
        for g in range(0, P, LANES):
            ss_load_dd(&grp, &xs[0], &ys[0], g, min(LANES, P - g))
            j = 0
            for k in range(S):
                target = scales[k]
                while j < target:
                    steps = target - j
                    if steps > SS_BLOCK:
                        steps = SS_BLOCK
                    ss_advance_dd(&grp, <int>steps, omega, lam, energy, hi2, lo2, &TRIG)
                    j += steps
                for l in range(min(LANES, P - g)):
                    mo[k, g + l, 0] = grp.h00[l]
                    mo[k, g + l, 1] = grp.h01[l]
                    mo[k, g + l, 2] = grp.h10[l]
                    mo[k, g + l, 3] = grp.h11[l]
                    lo[k, g + l] = grp.expo[l] * LN2
    return m_out, ls_out


def sturm_counts(const double[::1] diag, const double[::1] shifts):
    """Number of eigenvalues strictly below each shift (unit off-diagonals)."""
    cdef Py_ssize_t N = diag.shape[0]
    cdef Py_ssize_t K = shifts.shape[0]
    counts = np.zeros(K, dtype=np.int64)
    pivots = np.empty(K, dtype=np.float64)
    cdef int64_t[::1] c = counts
    cdef double[::1] d = pivots
    cdef Py_ssize_t i, s
    cdef double q, a
    if N == 0:
        return counts
    with nogil:
        a = diag[0]
        for s in range(K):
            q = a - shifts[s]
            if fabs(q) < PIVOT_FLOOR:
                q = copysign(PIVOT_FLOOR, q)
            d[s] = q
            c[s] += q < 0.0
        for i in range(1, N):
            a = diag[i]
            for s in range(K):
                q = (a - shifts[s]) - 1.0 / d[s]
                if fabs(q) < PIVOT_FLOOR:
                    q = copysign(PIVOT_FLOOR, q)
                d[s] = q
                c[s] += q < 0.0
    return counts


def bisect(const double[::1] diag, const int64_t[::1] ranks, double lo, double hi, double tol):
    """Bisect the eigenvalues of the given ascending ranks inside [lo, hi].

    Every rank must satisfy count(lo) <= rank < count(hi).
    """
    cdef Py_ssize_t K = ranks.shape[0]
    lo_arr = np.full(K, lo, dtype=np.float64)
    hi_arr = np.full(K, hi, dtype=np.float64)
    mid_arr = np.empty(K, dtype=np.float64)
    cdef double[::1] L = lo_arr
    cdef double[::1] H = hi_arr
    cdef double[::1] M = mid_arr
    cdef int64_t[::1] cnt
    cdef Py_ssize_t s
    cdef double width = hi - lo
    while width > tol:
        for s in range(K):
            M[s] = 0.5 * (L[s] + H[s])
        cnt = sturm_counts(diag, mid_arr)
        for s in range(K):
            if cnt[s] > ranks[s]:
                H[s] = M[s]
            else:
                L[s] = M[s]
        width *= 0.5
    return 0.5 * (lo_arr + hi_arr)
