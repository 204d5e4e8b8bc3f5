/* Inner loops of the skew-shift cocycle.
 *
 * One call advances SS_LANES independent orbits (and their 2x2 transfer
 * products) in lockstep using GCC/Clang vector extensions, which lower to
 * whatever SIMD width the target offers. The floating-point operation order
 * matches _trig.cos_turn and _fallback.products exactly; compile without FP
 * contraction.
 */
#ifndef SKEWSHIFT_CORE_H
#define SKEWSHIFT_CORE_H

#include <math.h>
#include <stdint.h>
#include <string.h>

#define SS_LANES 8
#define SS_BLOCK 32
#define SS_HALF_TURN ((uint64_t)1 << 63)
#define SS_LOW_MASK (SS_HALF_TURN - 1)
#define SS_REM_MASK (((uint64_t)1 << 52) - 1)
#define SS_INDEX_SHIFT 55

typedef double ss_vd __attribute__((vector_size(8 * SS_LANES)));
typedef uint64_t ss_vu __attribute__((vector_size(8 * SS_LANES)));
typedef int64_t ss_vi __attribute__((vector_size(8 * SS_LANES)));

typedef struct {
    const double *cos_t;
    const double *sin_t;
    double delta_scale;
    double c2, c4, c6, s3, s5, s7;
} ss_trig;

static inline double ss_cos_turn(uint64_t phase, const ss_trig *tr)
{
    uint64_t h = phase & SS_LOW_MASK;
    uint64_t idx = h >> SS_INDEX_SHIFT;
    double delta = (double)(int64_t)((h >> 3) & SS_REM_MASK) * tr->delta_scale;
    double d2 = delta * delta;
    double cd = 1.0 - d2 * (tr->c2 - d2 * (tr->c4 - d2 * tr->c6));
    double sd = delta * (1.0 - d2 * (tr->s3 - d2 * (tr->s5 - d2 * tr->s7)));
    double c = tr->cos_t[idx] * cd - tr->sin_t[idx] * sd;
    return (phase & SS_HALF_TURN) ? -c : c;
}

static inline ss_vd ss_cos_turn_v(ss_vu phase, const ss_trig *tr)
{
    ss_vu h = phase & SS_LOW_MASK;
    ss_vu idx = h >> SS_INDEX_SHIFT;
    ss_vd delta = __builtin_convertvector((ss_vi)((h >> 3) & SS_REM_MASK), ss_vd) * tr->delta_scale;
    ss_vd d2 = delta * delta;
    ss_vd cd = 1.0 - d2 * (tr->c2 - d2 * (tr->c4 - d2 * tr->c6));
    ss_vd sd = delta * (1.0 - d2 * (tr->s3 - d2 * (tr->s5 - d2 * tr->s7)));
    ss_vd ct, st, c;
    ss_vu bits;
    int l;
    for (l = 0; l < SS_LANES; l++) {
        ct[l] = tr->cos_t[idx[l]];
        st[l] = tr->sin_t[idx[l]];
    }
    c = ct * cd - st * sd;
    /* top phase bit -> sign bit: an exact negation */
    memcpy(&bits, &c, sizeof bits);
    bits ^= phase & SS_HALF_TURN;
    memcpy(&c, &bits, sizeof c);
    return c;
}

typedef struct {
    ss_vu x, y;
    ss_vd m00, m01, m10, m11;
    int64_t expo[SS_LANES];
} ss_group;

/* Advance every lane by `steps` (1..SS_BLOCK) transfer matrices, then
 * renormalize lanes whose squared Frobenius norm left [lo2, hi2] by an exact
 * power of two, recording the exponent in expo. */
static inline void ss_advance(ss_group *g, int steps, uint64_t omega,
                              double lam, double energy, double hi2,
                              double lo2, const ss_trig *tr)
{
    ss_vd a[SS_BLOCK];
    ss_vu x = g->x, y = g->y;
    ss_vd p00 = g->m00, p01 = g->m01, p10 = g->m10, p11 = g->m11, f2;
    int t, l;

    for (t = 0; t < steps; t++) {
        x += y;
        y += omega;
        a[t] = energy - lam * (2.0 * ss_cos_turn_v(x, tr));
    }
    for (t = 0; t < steps; t++) {
        ss_vd t0 = a[t] * p00 - p10;
        ss_vd t1 = a[t] * p01 - p11;
        p10 = p00;
        p11 = p01;
        p00 = t0;
        p01 = t1;
    }
    f2 = p00 * p00 + p01 * p01 + p10 * p10 + p11 * p11;
    for (l = 0; l < SS_LANES; l++) {
        if (f2[l] > hi2 || f2[l] < lo2) {
            int e, k;
            frexp(f2[l], &e);
            k = e >> 1;
            p00[l] = ldexp(p00[l], -k);
            p01[l] = ldexp(p01[l], -k);
            p10[l] = ldexp(p10[l], -k);
            p11[l] = ldexp(p11[l], -k);
            g->expo[l] += k;
        }
    }
    g->x = x;
    g->y = y;
    g->m00 = p00;
    g->m01 = p01;
    g->m10 = p10;
    g->m11 = p11;
}

/* Load up to SS_LANES points (padding by repetition) and reset products. */
static inline void ss_load(ss_group *g, const uint64_t *xs, const uint64_t *ys,
                           int64_t start, int64_t count)
{
    int l;
    for (l = 0; l < SS_LANES; l++) {
        int64_t i = start + (l < count ? l : count - 1);
        g->x[l] = xs[i];
        g->y[l] = ys[i];
        g->m00[l] = 1.0;
        g->m01[l] = 0.0;
        g->m10[l] = 0.0;
        g->m11[l] = 1.0;
        g->expo[l] = 0;
    }
}

/* Compensated variant: every product entry is carried as an unevaluated sum
 * hi + lo (double-double), built from Dekker's splitting product and Knuth's
 * two-sum, so the recursion error is O(eps**2) per step instead of O(eps).
 * No FMA, so the numpy fallback can follow the same operation order. */
#define SS_SPLIT 134217729.0

typedef struct {
    ss_vu x, y;
    ss_vd h00, l00, h01, l01, h10, l10, h11, l11;
    int64_t expo[SS_LANES];
} ss_group_dd;

/* (th, tl) = a * (ph + pl) - (qh + ql) */
static inline void ss_dd_step(ss_vd a, ss_vd ph, ss_vd pl, ss_vd qh, ss_vd ql,
                              ss_vd *th, ss_vd *tl)
{
    ss_vd c, ah, al, bh, bl, x, xe, s, bb, se, hi;
    x = a * ph;
    c = SS_SPLIT * a;
    ah = c - (c - a);
    al = a - ah;
    c = SS_SPLIT * ph;
    bh = c - (c - ph);
    bl = ph - bh;
    xe = ((ah * bh - x) + ah * bl + al * bh) + al * bl;
    xe = xe + a * pl;
    s = x - qh;
    bb = s - x;
    se = (x - (s - bb)) + (-qh - bb);
    se = se + (xe - ql);
    hi = s + se;
    *tl = se - (hi - s);
    *th = hi;
}

static inline void ss_advance_dd(ss_group_dd *g, int steps, uint64_t omega,
                                 double lam, double energy, double hi2,
                                 double lo2, const ss_trig *tr)
{
    ss_vd a[SS_BLOCK];
    ss_vu x = g->x, y = g->y;
    ss_vd h00 = g->h00, l00 = g->l00, h01 = g->h01, l01 = g->l01;
    ss_vd h10 = g->h10, l10 = g->l10, h11 = g->h11, l11 = g->l11;
    ss_vd t0h, t0l, t1h, t1l, f2;
    int t, l;

    for (t = 0; t < steps; t++) {
        x += y;
        y += omega;
        a[t] = energy - lam * (2.0 * ss_cos_turn_v(x, tr));
    }
    for (t = 0; t < steps; t++) {
        ss_dd_step(a[t], h00, l00, h10, l10, &t0h, &t0l);
        ss_dd_step(a[t], h01, l01, h11, l11, &t1h, &t1l);
        h10 = h00; l10 = l00;
        h11 = h01; l11 = l01;
        h00 = t0h; l00 = t0l;
        h01 = t1h; l01 = t1l;
    }
    f2 = h00 * h00 + h01 * h01 + h10 * h10 + h11 * h11;
    for (l = 0; l < SS_LANES; l++) {
        if (f2[l] > hi2 || f2[l] < lo2) {
            int e, k;
            frexp(f2[l], &e);
            k = e >> 1;
            h00[l] = ldexp(h00[l], -k); l00[l] = ldexp(l00[l], -k);
            h01[l] = ldexp(h01[l], -k); l01[l] = ldexp(l01[l], -k);
            h10[l] = ldexp(h10[l], -k); l10[l] = ldexp(l10[l], -k);
            h11[l] = ldexp(h11[l], -k); l11[l] = ldexp(l11[l], -k);
            g->expo[l] += k;
        }
    }
    g->x = x;
    g->y = y;
    g->h00 = h00; g->l00 = l00;
    g->h01 = h01; g->l01 = l01;
    g->h10 = h10; g->l10 = l10;
    g->h11 = h11; g->l11 = l11;
}

static inline void ss_load_dd(ss_group_dd *g, const uint64_t *xs, const uint64_t *ys,
                              int64_t start, int64_t count)
{
    int l;
    for (l = 0; l < SS_LANES; l++) {
        int64_t i = start + (l < count ? l : count - 1);
        g->x[l] = xs[i];
        g->y[l] = ys[i];
        g->h00[l] = 1.0; g->l00[l] = 0.0;
        g->h01[l] = 0.0; g->l01[l] = 0.0;
        g->h10[l] = 0.0; g->l10[l] = 0.0;
        g->h11[l] = 1.0; g->l11[l] = 0.0;
        g->expo[l] = 0;
    }
}

#endif
