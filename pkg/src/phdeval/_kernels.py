"""Numba JIT kernels for the two hot loops: thinning passes and the EDT.

Both kernels parallelize over independent rows/columns, and every deletion
or distance decision depends only on the pre-pass state, so results are
identical for any thread count.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange


@njit(cache=True, parallel=True)
def zs_subiteration(img, flags, step):
    """Flag deletable pixels for one Zhang-Suen sub-iteration.

    ``img`` is uint8 0/1 padded with a 1-pixel background border; ``flags``
    has the same shape and receives 1 where a pixel is to be deleted.
    ``step`` 0 uses the (P2*P4*P6, P4*P6*P8) conditions, step 1 the
    (P2*P4*P8, P2*P6*P8) pair.  Returns the number of flagged pixels.
    Flags are only set, never applied here: deletion is simultaneous.
    """
    h, w = img.shape
    total = 0
    for y in prange(1, h - 1):
        count = 0
        for x in range(1, w - 1):
            if img[y, x] == 0:
                continue
            p2 = img[y - 1, x]
            p3 = img[y - 1, x + 1]
            p4 = img[y, x + 1]
            p5 = img[y + 1, x + 1]
            p6 = img[y + 1, x]
            p7 = img[y + 1, x - 1]
            p8 = img[y, x - 1]
            p9 = img[y - 1, x - 1]
            b = int(p2) + int(p3) + int(p4) + int(p5) + int(p6) + int(p7) + int(p8) + int(p9)
            if b < 2 or b > 6:
                continue
            # 0->1 transitions in the cyclic sequence P2..P9,P2
            a = 0
            if p2 == 0 and p3 == 1:
                a += 1
            if p3 == 0 and p4 == 1:
                a += 1
            if p4 == 0 and p5 == 1:
                a += 1
            if p5 == 0 and p6 == 1:
                a += 1
            if p6 == 0 and p7 == 1:
                a += 1
            if p7 == 0 and p8 == 1:
                a += 1
            if p8 == 0 and p9 == 1:
                a += 1
            if p9 == 0 and p2 == 1:
                a += 1
            if a != 1:
                continue
            if step == 0:
                if p2 * p4 * p6 != 0:
                    continue
                if p4 * p6 * p8 != 0:
                    continue
            else:
                if p2 * p4 * p8 != 0:
                    continue
                if p2 * p6 * p8 != 0:
                    continue
            flags[y, x] = 1
            count += 1
        total += count
    return total


@njit(cache=True, parallel=True)
def zs_apply(img, flags):
    """Delete all flagged pixels and clear the flags plane."""
    h, w = img.shape
    for y in prange(h):
        for x in range(w):
            if flags[y, x] != 0:
                img[y, x] = 0
                flags[y, x] = 0


@njit(cache=True, parallel=True)
def edt_columns(fg, g, inf):
    """First EDT pass: per-column 1-D distance to the nearest foreground.

    Writes into int32 ``g``; columns with no foreground get ``inf``
    (a sentinel larger than any possible in-image distance).
    """
    h, w = fg.shape
    for x in prange(w):
        prev = inf
        for y in range(h):
            if fg[y, x] != 0:
                prev = 0
            elif prev < inf:
                prev = prev + 1
            g[y, x] = prev
        prev = g[h - 1, x]
        for y in range(h - 2, -1, -1):
            nxt = prev + 1 if prev < inf else inf
            if nxt < g[y, x]:
                g[y, x] = nxt
            prev = g[y, x]


@njit(cache=True, parallel=True)
def edt_rows(g, dist2):
    """Second EDT pass: per-row lower envelope of the parabolas
    (x - i)^2 + g[i]^2, evaluated in exact int64 arithmetic.

    The break-point division is exact because when a parabola joins the
    envelope its crossover with the current segment lies at a non-negative
    abscissa, so floor division equals the mathematical integer part.
    """
    h, w = g.shape
    for y in prange(h):
        s = np.empty(w, dtype=np.int64)  # abscissa of the i-th envelope parabola
        t = np.empty(w, dtype=np.int64)  # first grid point where it is minimal
        q = 0
        s[0] = 0
        t[0] = 0
        for u in range(1, w):
            gu2 = np.int64(g[y, u]) * np.int64(g[y, u])
            while q >= 0:
                tq = t[q]
                sq = s[q]
                fs = (tq - sq) * (tq - sq) + np.int64(g[y, sq]) * np.int64(g[y, sq])
                fu = (tq - u) * (tq - u) + gu2
                if fs <= fu:
                    break
                q -= 1
            if q < 0:
                q = 0
                s[0] = u
                t[0] = 0
            else:
                sq = s[q]
                num = u * u - sq * sq + gu2 - np.int64(g[y, sq]) * np.int64(g[y, sq])
                sep = num // (2 * (u - sq))
                wpos = 1 + sep
                if wpos < w:
                    q += 1
                    s[q] = u
                    t[q] = wpos
        for u in range(w - 1, -1, -1):
            sq = s[q]
            d = np.int64(u - sq)
            dist2[y, u] = d * d + np.int64(g[y, sq]) * np.int64(g[y, sq])
            if u == t[q]:
                q -= 1
