"""Pure numpy implementations of the compiled kernels.

Same signatures, conventions and floating-point operation order as
``_kernels``, so results agree bit for bit. Vectorized across points
(products) or shifts (Sturm counts); the walk along the orbit stays in Python.
"""

import numpy as np

from . import _trig

BLOCK = 32
PIVOT_FLOOR = 1e-300
LN2 = 0.6931471805599453

_HALF_TURN = np.uint64(_trig.HALF_TURN)
_LOW_MASK = np.uint64(_trig.LOW_MASK)
_REM_MASK = np.uint64(_trig.REM_MASK)
_INDEX_SHIFT = np.uint64(_trig.INDEX_SHIFT)
_THREE = np.uint64(3)
_COS_T = np.array(_trig.COS_TABLE)
_SIN_T = np.array(_trig.SIN_TABLE)


def cos_turn(phase):
    phase = np.asarray(phase, dtype=np.uint64)
    h = phase & _LOW_MASK
    idx = (h >> _INDEX_SHIFT).astype(np.intp)
    delta = ((h >> _THREE) & _REM_MASK).astype(np.int64).astype(np.float64) * _trig.DELTA_SCALE
    d2 = delta * delta
    cd = 1.0 - d2 * (_trig.C2 - d2 * (_trig.C4 - d2 * _trig.C6))
    sd = delta * (1.0 - d2 * (_trig.S3 - d2 * (_trig.S5 - d2 * _trig.S7)))
    c = _COS_T[idx] * cd - _SIN_T[idx] * sd
    return np.where((phase & _HALF_TURN) != 0, -c, c)


def potential_sequence(x, y, omega, n):
    """v_1..v_n along the orbit of (x, y)."""
    with np.errstate(over="ignore"):
        ys = np.uint64(y) + np.arange(int(n), dtype=np.uint64) * np.uint64(omega)
        phase = np.uint64(x) + np.cumsum(ys, dtype=np.uint64)
    return 2.0 * cos_turn(phase)


def _renormalize(m00, m01, m10, m11, expo, hi2, lo2):
    f2 = m00 * m00 + m01 * m01 + m10 * m10 + m11 * m11
    hit = (f2 > hi2) | (f2 < lo2)
    if not hit.any():
        return m00, m01, m10, m11, expo
    _, e = np.frexp(f2)
    k = np.where(hit, e >> 1, 0)
    return (np.ldexp(m00, -k), np.ldexp(m01, -k), np.ldexp(m10, -k),
            np.ldexp(m11, -k), expo + k)


def products(xs, ys, omega, lam, energy, scales, renorm=2.0):
    """Scaled transfer products at each requested scale for every point.

    Returns ``(m, log_scale)`` with shapes ``(S, P, 4)`` and ``(S, P)``.
    """
    X = np.array(xs, dtype=np.uint64, copy=True)
    Y = np.array(ys, dtype=np.uint64, copy=True)
    scales = [int(s) for s in scales]
    P, S = X.shape[0], len(scales)
    m_out = np.empty((S, P, 4))
    ls_out = np.empty((S, P))
    if S == 0 or P == 0:
        return m_out, ls_out
    om = np.uint64(omega)
    hi2 = renorm * renorm
    lo2 = 1.0 / hi2
    m00, m01 = np.ones(P), np.zeros(P)
    m10, m11 = np.zeros(P), np.ones(P)
    expo = np.zeros(P, dtype=np.int64)
    j = 0
    for k, target in enumerate(scales):
        while j < target:
            steps = min(BLOCK, target - j)
            for _ in range(steps):
                X += Y
                Y += om
                a = energy - lam * (2.0 * cos_turn(X))
                m00, m01, m10, m11 = a * m00 - m10, a * m01 - m11, m00, m01
            m00, m01, m10, m11, expo = _renormalize(m00, m01, m10, m11, expo, hi2, lo2)
            j += steps
        m_out[k] = np.stack([m00, m01, m10, m11], axis=1)
        ls_out[k] = expo * LN2
    return m_out, ls_out


SPLIT = 134217729.0


def _dd_step(a, ph, pl, qh, ql):
    """a * (ph + pl) - (qh + ql) in double-double; same operation order as _core.h."""
    x = a * ph
    c = SPLIT * a
    ah = c - (c - a)
    al = a - ah
    c = SPLIT * ph
    bh = c - (c - ph)
    bl = ph - bh
    xe = ((ah * bh - x) + ah * bl + al * bh) + al * bl
    xe = xe + a * pl
    s = x - qh
    bb = s - x
    se = (x - (s - bb)) + (-qh - bb)
    se = se + (xe - ql)
    hi = s + se
    return hi, se - (hi - s)


def products_dd(xs, ys, omega, lam, energy, scales, renorm=2.0):
    """Like ``products`` with double-double accumulation; returns the rounded hi parts."""
    X = np.array(xs, dtype=np.uint64, copy=True)
    Y = np.array(ys, dtype=np.uint64, copy=True)
    scales = [int(s) for s in scales]
    P, S = X.shape[0], len(scales)
    m_out = np.empty((S, P, 4))
    ls_out = np.empty((S, P))
    if S == 0 or P == 0:
        return m_out, ls_out
    om = np.uint64(omega)
    hi2 = renorm * renorm
    lo2 = 1.0 / hi2
    one, zero = np.ones(P), np.zeros(P)
    h = [one, zero, zero, one.copy()]
    lo = [zero.copy() for _ in range(4)]
    expo = np.zeros(P, dtype=np.int64)
    j = 0
    for k, target in enumerate(scales):
        while j < target:
            steps = min(BLOCK, target - j)
            for _ in range(steps):
                X += Y
                Y += om
                a = energy - lam * (2.0 * cos_turn(X))
                t0 = _dd_step(a, h[0], lo[0], h[2], lo[2])
                t1 = _dd_step(a, h[1], lo[1], h[3], lo[3])
                h = [t0[0], t1[0], h[0], h[1]]
                lo = [t0[1], t1[1], lo[0], lo[1]]
            f2 = h[0] * h[0] + h[1] * h[1] + h[2] * h[2] + h[3] * h[3]
            hit = (f2 > hi2) | (f2 < lo2)
            if hit.any():
                _, e = np.frexp(f2)
                kk = np.where(hit, e >> 1, 0)
                h = [np.ldexp(v, -kk) for v in h]
                lo = [np.ldexp(v, -kk) for v in lo]
                expo = expo + kk
            j += steps
        m_out[k] = np.stack(h, axis=1)
        ls_out[k] = expo * LN2
    return m_out, ls_out


def sturm_counts(diag, shifts):
    """Number of eigenvalues strictly below each shift (unit off-diagonals)."""
    diag = np.asarray(diag, dtype=np.float64)
    shifts = np.asarray(shifts, dtype=np.float64)
    counts = np.zeros(shifts.shape[0], dtype=np.int64)
    d = None
    for a in diag:
        q = a - shifts if d is None else (a - shifts) - 1.0 / d
        small = np.abs(q) < PIVOT_FLOOR
        if small.any():
            q = np.where(small, np.copysign(PIVOT_FLOOR, q), q)
        counts += q < 0.0
        d = q
    return counts


def bisect(diag, ranks, lo, hi, tol):
    """Bisect the eigenvalues of the given ascending ranks inside [lo, hi]."""
    ranks = np.asarray(ranks, dtype=np.int64)
    L = np.full(ranks.shape[0], lo, dtype=np.float64)
    H = np.full(ranks.shape[0], hi, dtype=np.float64)
    width = hi - lo
    while width > tol:
        M = 0.5 * (L + H)
        up = sturm_counts(diag, M) > ranks
        H = np.where(up, M, H)
        L = np.where(up, L, M)
        width *= 0.5
    return 0.5 * (L + H)
