"""Compiled inner loops for the lattice collision quadrature.

Every kernel walks a precomputed entry table: one entry per (lattice offset,
sphere node) pair, carrying the integer base offsets of the two
post-collisional interpolation stencils relative to the current cell and the
fractional positions inside them (constant across the grid by translation
invariance).  Loops are sequential and entry order is fixed, so results are
bit-for-bit reproducible; no fastmath, no threading.

Velocity arrays arrive flattened with zero padding wide enough that no
stencil read can leave the buffer; ``n`` is the unpadded points per axis,
``npx`` the padded one, ``pad`` the margin.  ``order`` selects bilinear (1)
or separable cubic (3) stencils; cubic weights are the Lagrange 4-point
weights evaluated in-kernel.

2-d entry layout: ints = (d1, d2, po1, po2, ps1, ps2),
floats = (c, ty, tx, tys, txs) with c the full quadrature coefficient.
3-d entry layout extends both by one axis (9 ints, 7 floats).
"""

import numba
import numpy as np


@numba.njit(inline="always", cache=True)
def _cubic(t):
    w0 = -t * (t - 1.0) * (t - 2.0) / 6.0
    w1 = (t * t - 1.0) * (t - 2.0) / 2.0
    w2 = -t * (t + 1.0) * (t - 2.0) / 2.0
    w3 = t * (t * t - 1.0) / 6.0
    return w0, w1, w2, w3


@numba.njit(inline="always", cache=True)
def bxw(w, i):
    # tuples only take literal indices under numba, hence the unrolled pick
    if i == 0:
        return w[0]
    if i == 1:
        return w[1]
    if i == 2:
        return w[2]
    return w[3]


@numba.njit(cache=True)
def bracket2(ints, floats, fpad, gpad, n, npx, pad, order, out):
    """Accumulate the symmetrized collision bracket on a 2-d lattice."""
    m = ints.shape[0]
    for e in range(m):
        d1 = ints[e, 0]
        d2 = ints[e, 1]
        po1 = ints[e, 2]
        po2 = ints[e, 3]
        ps1 = ints[e, 4]
        ps2 = ints[e, 5]
        c = floats[e, 0]
        ty = floats[e, 1]
        tx = floats[e, 2]
        tys = floats[e, 3]
        txs = floats[e, 4]
        y0 = -d1 if d1 < 0 else 0
        y1 = n - d1 if d1 > 0 else n
        x0 = -d2 if d2 < 0 else 0
        x1 = n - d2 if d2 > 0 else n
        if order == 1:
            wy1 = ty
            wy0 = 1.0 - ty
            wx1 = tx
            wx0 = 1.0 - tx
            vy1 = tys
            vy0 = 1.0 - tys
            vx1 = txs
            vx0 = 1.0 - txs
            for iy in range(y0, y1):
                fb = (iy + pad) * npx + pad
                sb = (iy + d1 + pad) * npx + pad + d2
                pb = (iy + po1 + pad) * npx + pad + po2
                qb = (iy + ps1 + pad) * npx + pad + ps2
                ob = iy * n
                for ix in range(x0, x1):
                    fv = fpad[fb + ix]
                    gv = gpad[fb + ix]
                    fs = fpad[sb + ix]
                    gs = gpad[sb + ix]
                    jp = pb + ix
                    fp = wy0 * (wx0 * fpad[jp] + wx1 * fpad[jp + 1]) + wy1 * (
                        wx0 * fpad[jp + npx] + wx1 * fpad[jp + npx + 1]
                    )
                    gp = wy0 * (wx0 * gpad[jp] + wx1 * gpad[jp + 1]) + wy1 * (
                        wx0 * gpad[jp + npx] + wx1 * gpad[jp + npx + 1]
                    )
                    js = qb + ix
                    fq = vy0 * (vx0 * fpad[js] + vx1 * fpad[js + 1]) + vy1 * (
                        vx0 * fpad[js + npx] + vx1 * fpad[js + npx + 1]
                    )
                    gq = vy0 * (vx0 * gpad[js] + vx1 * gpad[js + 1]) + vy1 * (
                        vx0 * gpad[js + npx] + vx1 * gpad[js + npx + 1]
                    )
                    out[ob + ix] += c * (gq * fp + gp * fq - gs * fv - gv * fs)
        else:
            ay0, ay1, ay2, ay3 = _cubic(ty)
            ax0, ax1, ax2, ax3 = _cubic(tx)
            by0, by1, by2, by3 = _cubic(tys)
            bx0, bx1, bx2, bx3 = _cubic(txs)
            for iy in range(y0, y1):
                fb = (iy + pad) * npx + pad
                sb = (iy + d1 + pad) * npx + pad + d2
                pb = (iy + po1 - 1 + pad) * npx + pad + po2 - 1
                qb = (iy + ps1 - 1 + pad) * npx + pad + ps2 - 1
                ob = iy * n
                for ix in range(x0, x1):
                    fv = fpad[fb + ix]
                    gv = gpad[fb + ix]
                    fs = fpad[sb + ix]
                    gs = gpad[sb + ix]
                    jp = pb + ix
                    fp = 0.0
                    gp = 0.0
                    r0 = ay0 * (
                        ax0 * fpad[jp]
                        + ax1 * fpad[jp + 1]
                        + ax2 * fpad[jp + 2]
                        + ax3 * fpad[jp + 3]
                    )
                    r1 = ay1 * (
                        ax0 * fpad[jp + npx]
                        + ax1 * fpad[jp + npx + 1]
                        + ax2 * fpad[jp + npx + 2]
                        + ax3 * fpad[jp + npx + 3]
                    )
                    r2 = ay2 * (
                        ax0 * fpad[jp + 2 * npx]
                        + ax1 * fpad[jp + 2 * npx + 1]
                        + ax2 * fpad[jp + 2 * npx + 2]
                        + ax3 * fpad[jp + 2 * npx + 3]
                    )
                    r3 = ay3 * (
                        ax0 * fpad[jp + 3 * npx]
                        + ax1 * fpad[jp + 3 * npx + 1]
                        + ax2 * fpad[jp + 3 * npx + 2]
                        + ax3 * fpad[jp + 3 * npx + 3]
                    )
                    fp = r0 + r1 + r2 + r3
                    r0 = ay0 * (
                        ax0 * gpad[jp]
                        + ax1 * gpad[jp + 1]
                        + ax2 * gpad[jp + 2]
                        + ax3 * gpad[jp + 3]
                    )
                    r1 = ay1 * (
                        ax0 * gpad[jp + npx]
                        + ax1 * gpad[jp + npx + 1]
                        + ax2 * gpad[jp + npx + 2]
                        + ax3 * gpad[jp + npx + 3]
                    )
                    r2 = ay2 * (
                        ax0 * gpad[jp + 2 * npx]
                        + ax1 * gpad[jp + 2 * npx + 1]
                        + ax2 * gpad[jp + 2 * npx + 2]
                        + ax3 * gpad[jp + 2 * npx + 3]
                    )
                    r3 = ay3 * (
                        ax0 * gpad[jp + 3 * npx]
                        + ax1 * gpad[jp + 3 * npx + 1]
                        + ax2 * gpad[jp + 3 * npx + 2]
                        + ax3 * gpad[jp + 3 * npx + 3]
                    )
                    gp = r0 + r1 + r2 + r3
                    js = qb + ix
                    r0 = by0 * (
                        bx0 * fpad[js]
                        + bx1 * fpad[js + 1]
                        + bx2 * fpad[js + 2]
                        + bx3 * fpad[js + 3]
                    )
                    r1 = by1 * (
                        bx0 * fpad[js + npx]
                        + bx1 * fpad[js + npx + 1]
                        + bx2 * fpad[js + npx + 2]
                        + bx3 * fpad[js + npx + 3]
                    )
                    r2 = by2 * (
                        bx0 * fpad[js + 2 * npx]
                        + bx1 * fpad[js + 2 * npx + 1]
                        + bx2 * fpad[js + 2 * npx + 2]
                        + bx3 * fpad[js + 2 * npx + 3]
                    )
                    r3 = by3 * (
                        bx0 * fpad[js + 3 * npx]
                        + bx1 * fpad[js + 3 * npx + 1]
                        + bx2 * fpad[js + 3 * npx + 2]
                        + bx3 * fpad[js + 3 * npx + 3]
                    )
                    fq = r0 + r1 + r2 + r3
                    r0 = by0 * (
                        bx0 * gpad[js]
                        + bx1 * gpad[js + 1]
                        + bx2 * gpad[js + 2]
                        + bx3 * gpad[js + 3]
                    )
                    r1 = by1 * (
                        bx0 * gpad[js + npx]
                        + bx1 * gpad[js + npx + 1]
                        + bx2 * gpad[js + npx + 2]
                        + bx3 * gpad[js + npx + 3]
                    )
                    r2 = by2 * (
                        bx0 * gpad[js + 2 * npx]
                        + bx1 * gpad[js + 2 * npx + 1]
                        + bx2 * gpad[js + 2 * npx + 2]
                        + bx3 * gpad[js + 2 * npx + 3]
                    )
                    r3 = by3 * (
                        bx0 * gpad[js + 3 * npx]
                        + bx1 * gpad[js + 3 * npx + 1]
                        + bx2 * gpad[js + 3 * npx + 2]
                        + bx3 * gpad[js + 3 * npx + 3]
                    )
                    gq = r0 + r1 + r2 + r3
                    out[ob + ix] += c * (gq * fp + gp * fq - gs * fv - gv * fs)


@numba.njit(cache=True)
def deposit2(ints, floats, fpad, gpad, n, npx, pad, order, out):
    """Scatter the gain term onto the (padded) lattice, 2-d.

    Each entry deposits c*g(v_star)*f(v) at the stencil of v' and
    c*g(v)*f(v_star) at the stencil of v'_star; mass landing in the padding
    is outflow through the velocity truncation and stays there.
    """
    m = ints.shape[0]
    for e in range(m):
        d1 = ints[e, 0]
        d2 = ints[e, 1]
        po1 = ints[e, 2]
        po2 = ints[e, 3]
        ps1 = ints[e, 4]
        ps2 = ints[e, 5]
        c = floats[e, 0]
        ty = floats[e, 1]
        tx = floats[e, 2]
        tys = floats[e, 3]
        txs = floats[e, 4]
        y0 = -d1 if d1 < 0 else 0
        y1 = n - d1 if d1 > 0 else n
        x0 = -d2 if d2 < 0 else 0
        x1 = n - d2 if d2 > 0 else n
        if order == 1:
            wy1 = ty
            wy0 = 1.0 - ty
            wx1 = tx
            wx0 = 1.0 - tx
            vy1 = tys
            vy0 = 1.0 - tys
            vx1 = txs
            vx0 = 1.0 - txs
            for iy in range(y0, y1):
                fb = (iy + pad) * npx + pad
                sb = (iy + d1 + pad) * npx + pad + d2
                pb = (iy + po1 + pad) * npx + pad + po2
                qb = (iy + ps1 + pad) * npx + pad + ps2
                for ix in range(x0, x1):
                    fv = fpad[fb + ix]
                    gv = gpad[fb + ix]
                    fs = fpad[sb + ix]
                    gs = gpad[sb + ix]
                    ap = c * gs * fv
                    aq = c * gv * fs
                    jp = pb + ix
                    out[jp] += wy0 * wx0 * ap
                    out[jp + 1] += wy0 * wx1 * ap
                    out[jp + npx] += wy1 * wx0 * ap
                    out[jp + npx + 1] += wy1 * wx1 * ap
                    js = qb + ix
                    out[js] += vy0 * vx0 * aq
                    out[js + 1] += vy0 * vx1 * aq
                    out[js + npx] += vy1 * vx0 * aq
                    out[js + npx + 1] += vy1 * vx1 * aq
        else:
            ay = _cubic(ty)
            ax = _cubic(tx)
            by = _cubic(tys)
            bx = _cubic(txs)
            for iy in range(y0, y1):
                fb = (iy + pad) * npx + pad
                sb = (iy + d1 + pad) * npx + pad + d2
                pb = (iy + po1 - 1 + pad) * npx + pad + po2 - 1
                qb = (iy + ps1 - 1 + pad) * npx + pad + ps2 - 1
                for ix in range(x0, x1):
                    fv = fpad[fb + ix]
                    gv = gpad[fb + ix]
                    fs = fpad[sb + ix]
                    gs = gpad[sb + ix]
                    ap = c * gs * fv
                    aq = c * gv * fs
                    jp = pb + ix
                    for r in range(4):
                        row = jp + r * npx
                        wr = bxw(ay, r) * ap
                        out[row] += bxw(ax, 0) * wr
                        out[row + 1] += bxw(ax, 1) * wr
                        out[row + 2] += bxw(ax, 2) * wr
                        out[row + 3] += bxw(ax, 3) * wr
                    js = qb + ix
                    for r in range(4):
                        row = js + r * npx
                        wr = bxw(by, r) * aq
                        out[row] += bxw(bx, 0) * wr
                        out[row + 1] += bxw(bx, 1) * wr
                        out[row + 2] += bxw(bx, 2) * wr
                        out[row + 3] += bxw(bx, 3) * wr


@numba.njit(cache=True)
def gain2(ints, floats, fpad, gpad, n, npx, pad, order, out):
    """Gather form of the gain term on a 2-d lattice (positive bracket half)."""
    m = ints.shape[0]
    for e in range(m):
        d1 = ints[e, 0]
        d2 = ints[e, 1]
        po1 = ints[e, 2]
        po2 = ints[e, 3]
        ps1 = ints[e, 4]
        ps2 = ints[e, 5]
        c = floats[e, 0]
        ty = floats[e, 1]
        tx = floats[e, 2]
        tys = floats[e, 3]
        txs = floats[e, 4]
        y0 = -d1 if d1 < 0 else 0
        y1 = n - d1 if d1 > 0 else n
        x0 = -d2 if d2 < 0 else 0
        x1 = n - d2 if d2 > 0 else n
        if order == 1:
            wy1 = ty
            wy0 = 1.0 - ty
            wx1 = tx
            wx0 = 1.0 - tx
            vy1 = tys
            vy0 = 1.0 - tys
            vx1 = txs
            vx0 = 1.0 - txs
            for iy in range(y0, y1):
                pb = (iy + po1 + pad) * npx + pad + po2
                qb = (iy + ps1 + pad) * npx + pad + ps2
                ob = iy * n
                for ix in range(x0, x1):
                    jp = pb + ix
                    fp = wy0 * (wx0 * fpad[jp] + wx1 * fpad[jp + 1]) + wy1 * (
                        wx0 * fpad[jp + npx] + wx1 * fpad[jp + npx + 1]
                    )
                    gp = wy0 * (wx0 * gpad[jp] + wx1 * gpad[jp + 1]) + wy1 * (
                        wx0 * gpad[jp + npx] + wx1 * gpad[jp + npx + 1]
                    )
                    js = qb + ix
                    fq = vy0 * (vx0 * fpad[js] + vx1 * fpad[js + 1]) + vy1 * (
                        vx0 * fpad[js + npx] + vx1 * fpad[js + npx + 1]
                    )
                    gq = vy0 * (vx0 * gpad[js] + vx1 * gpad[js + 1]) + vy1 * (
                        vx0 * gpad[js + npx] + vx1 * gpad[js + npx + 1]
                    )
                    out[ob + ix] += c * (gq * fp + gp * fq)
        else:
            ay = _cubic(ty)
            ax = _cubic(tx)
            by = _cubic(tys)
            bx = _cubic(txs)
            for iy in range(y0, y1):
                pb = (iy + po1 - 1 + pad) * npx + pad + po2 - 1
                qb = (iy + ps1 - 1 + pad) * npx + pad + ps2 - 1
                ob = iy * n
                for ix in range(x0, x1):
                    jp = pb + ix
                    fp = 0.0
                    gp = 0.0
                    for r in range(4):
                        row = jp + r * npx
                        sf = (
                            bxw(ax, 0) * fpad[row]
                            + bxw(ax, 1) * fpad[row + 1]
                            + bxw(ax, 2) * fpad[row + 2]
                            + bxw(ax, 3) * fpad[row + 3]
                        )
                        sg = (
                            bxw(ax, 0) * gpad[row]
                            + bxw(ax, 1) * gpad[row + 1]
                            + bxw(ax, 2) * gpad[row + 2]
                            + bxw(ax, 3) * gpad[row + 3]
                        )
                        fp += bxw(ay, r) * sf
                        gp += bxw(ay, r) * sg
                    js = qb + ix
                    fq = 0.0
                    gq = 0.0
                    for r in range(4):
                        row = js + r * npx
                        sf = (
                            bxw(bx, 0) * fpad[row]
                            + bxw(bx, 1) * fpad[row + 1]
                            + bxw(bx, 2) * fpad[row + 2]
                            + bxw(bx, 3) * fpad[row + 3]
                        )
                        sg = (
                            bxw(bx, 0) * gpad[row]
                            + bxw(bx, 1) * gpad[row + 1]
                            + bxw(bx, 2) * gpad[row + 2]
                            + bxw(bx, 3) * gpad[row + 3]
                        )
                        fq += bxw(by, r) * sf
                        gq += bxw(by, r) * sg
                    out[ob + ix] += c * (gq * fp + gp * fq)


@numba.njit(cache=True)
def entropy2(ints, floats, fpad, n, npx, pad, order, log_cap):
    """Entropy dissipation sum (f' f'_star - f f_star) log-ratio, 2-d.

    Log ratios are clamped to [-log_cap, log_cap]; products that are not
    strictly positive fall back to the clamp with the sign that keeps the
    summand nonnegative.  Returns (raw sum, number of clamped terms); the
    caller applies the 1/2 h^2 prefactor.
    """
    m = ints.shape[0]
    acc = 0.0
    clamped = 0
    for e in range(m):
        d1 = ints[e, 0]
        d2 = ints[e, 1]
        po1 = ints[e, 2]
        po2 = ints[e, 3]
        ps1 = ints[e, 4]
        ps2 = ints[e, 5]
        c = floats[e, 0]
        ty = floats[e, 1]
        tx = floats[e, 2]
        tys = floats[e, 3]
        txs = floats[e, 4]
        y0 = -d1 if d1 < 0 else 0
        y1 = n - d1 if d1 > 0 else n
        x0 = -d2 if d2 < 0 else 0
        x1 = n - d2 if d2 > 0 else n
        wy1 = ty
        wy0 = 1.0 - ty
        wx1 = tx
        wx0 = 1.0 - tx
        vy1 = tys
        vy0 = 1.0 - tys
        vx1 = txs
        vx0 = 1.0 - txs
        ay = _cubic(ty)
        ax = _cubic(tx)
        by = _cubic(tys)
        bx = _cubic(txs)
        for iy in range(y0, y1):
            fb = (iy + pad) * npx + pad
            sb = (iy + d1 + pad) * npx + pad + d2
            if order == 1:
                pb = (iy + po1 + pad) * npx + pad + po2
                qb = (iy + ps1 + pad) * npx + pad + ps2
            else:
                pb = (iy + po1 - 1 + pad) * npx + pad + po2 - 1
                qb = (iy + ps1 - 1 + pad) * npx + pad + ps2 - 1
            for ix in range(x0, x1):
                fv = fpad[fb + ix]
                fs = fpad[sb + ix]
                jp = pb + ix
                js = qb + ix
                if order == 1:
                    fp = wy0 * (wx0 * fpad[jp] + wx1 * fpad[jp + 1]) + wy1 * (
                        wx0 * fpad[jp + npx] + wx1 * fpad[jp + npx + 1]
                    )
                    fq = vy0 * (vx0 * fpad[js] + vx1 * fpad[js + 1]) + vy1 * (
                        vx0 * fpad[js + npx] + vx1 * fpad[js + npx + 1]
                    )
                else:
                    fp = 0.0
                    fq = 0.0
                    for r in range(4):
                        row = jp + r * npx
                        fp += bxw(ay, r) * (
                            bxw(ax, 0) * fpad[row]
                            + bxw(ax, 1) * fpad[row + 1]
                            + bxw(ax, 2) * fpad[row + 2]
                            + bxw(ax, 3) * fpad[row + 3]
                        )
                        row = js + r * npx
                        fq += bxw(by, r) * (
                            bxw(bx, 0) * fpad[row]
                            + bxw(bx, 1) * fpad[row + 1]
                            + bxw(bx, 2) * fpad[row + 2]
                            + bxw(bx, 3) * fpad[row + 3]
                        )
                post = fp * fq
                pre = fv * fs
                diff = post - pre
                if diff == 0.0:
                    continue
                if post > 0.0 and pre > 0.0:
                    lr = np.log(post / pre)
                    if lr > log_cap:
                        lr = log_cap
                        clamped += 1
                    elif lr < -log_cap:
                        lr = -log_cap
                        clamped += 1
                else:
                    lr = log_cap if diff > 0.0 else -log_cap
                    clamped += 1
                acc += c * diff * lr
    return acc, clamped


@numba.njit(cache=True)
def bracket3(ints, floats, fpad, gpad, n, npx, pad, order, out):
    """Collision bracket on a 3-d lattice (trilinear or tricubic stencils)."""
    m = ints.shape[0]
    np2 = npx * npx
    for e in range(m):
        d1 = ints[e, 0]
        d2 = ints[e, 1]
        d3 = ints[e, 2]
        po1 = ints[e, 3]
        po2 = ints[e, 4]
        po3 = ints[e, 5]
        ps1 = ints[e, 6]
        ps2 = ints[e, 7]
        ps3 = ints[e, 8]
        c = floats[e, 0]
        t1 = floats[e, 1]
        t2 = floats[e, 2]
        t3 = floats[e, 3]
        s1 = floats[e, 4]
        s2 = floats[e, 5]
        s3 = floats[e, 6]
        z0 = -d1 if d1 < 0 else 0
        z1 = n - d1 if d1 > 0 else n
        y0 = -d2 if d2 < 0 else 0
        y1 = n - d2 if d2 > 0 else n
        x0 = -d3 if d3 < 0 else 0
        x1 = n - d3 if d3 > 0 else n
        if order == 1:
            shift_p = (po1 + pad) * np2 + (po2 + pad) * npx + po3 + pad
            shift_q = (ps1 + pad) * np2 + (ps2 + pad) * npx + ps3 + pad
        else:
            shift_p = (po1 - 1 + pad) * np2 + (po2 - 1 + pad) * npx + po3 - 1 + pad
            shift_q = (ps1 - 1 + pad) * np2 + (ps2 - 1 + pad) * npx + ps3 - 1 + pad
        shift_s = (d1 + pad) * np2 + (d2 + pad) * npx + d3 + pad
        shift_f = pad * np2 + pad * npx + pad
        a1 = _cubic(t1)
        a2 = _cubic(t2)
        a3 = _cubic(t3)
        b1 = _cubic(s1)
        b2 = _cubic(s2)
        b3 = _cubic(s3)
        u1l = 1.0 - t1
        u2l = 1.0 - t2
        u3l = 1.0 - t3
        v1l = 1.0 - s1
        v2l = 1.0 - s2
        v3l = 1.0 - s3
        for iz in range(z0, z1):
            for iy in range(y0, y1):
                base = iz * np2 + iy * npx
                ob = (iz * n + iy) * n
                for ix in range(x0, x1):
                    cell = base + ix
                    fv = fpad[cell + shift_f]
                    gv = gpad[cell + shift_f]
                    fs = fpad[cell + shift_s]
                    gs = gpad[cell + shift_s]
                    jp = cell + shift_p
                    js = cell + shift_q
                    if order == 1:
                        fp = 0.0
                        gp = 0.0
                        fq = 0.0
                        gq = 0.0
                        for a in range(2):
                            wa = u1l if a == 0 else t1
                            va = v1l if a == 0 else s1
                            for b in range(2):
                                wb = wa * (u2l if b == 0 else t2)
                                vb = va * (v2l if b == 0 else s2)
                                idx = jp + a * np2 + b * npx
                                jdx = js + a * np2 + b * npx
                                fp += wb * (u3l * fpad[idx] + t3 * fpad[idx + 1])
                                gp += wb * (u3l * gpad[idx] + t3 * gpad[idx + 1])
                                fq += vb * (v3l * fpad[jdx] + s3 * fpad[jdx + 1])
                                gq += vb * (v3l * gpad[jdx] + s3 * gpad[jdx + 1])
                    else:
                        fp = 0.0
                        gp = 0.0
                        fq = 0.0
                        gq = 0.0
                        for a in range(4):
                            for b in range(4):
                                wab = bxw(a1, a) * bxw(a2, b)
                                vab = bxw(b1, a) * bxw(b2, b)
                                idx = jp + a * np2 + b * npx
                                jdx = js + a * np2 + b * npx
                                rowf = 0.0
                                rowg = 0.0
                                qf = 0.0
                                qg = 0.0
                                for cpos in range(4):
                                    rowf += bxw(a3, cpos) * fpad[idx + cpos]
                                    rowg += bxw(a3, cpos) * gpad[idx + cpos]
                                    qf += bxw(b3, cpos) * fpad[jdx + cpos]
                                    qg += bxw(b3, cpos) * gpad[jdx + cpos]
                                fp += wab * rowf
                                gp += wab * rowg
                                fq += vab * qf
                                gq += vab * qg
                    out[ob + ix] += c * (gq * fp + gp * fq - gs * fv - gv * fs)


@numba.njit(cache=True)
def gain3(ints, floats, fpad, gpad, n, npx, pad, order, out):
    """Gather form of the gain term on a 3-d lattice."""
    m = ints.shape[0]
    np2 = npx * npx
    for e in range(m):
        d1 = ints[e, 0]
        d2 = ints[e, 1]
        d3 = ints[e, 2]
        po1 = ints[e, 3]
        po2 = ints[e, 4]
        po3 = ints[e, 5]
        ps1 = ints[e, 6]
        ps2 = ints[e, 7]
        ps3 = ints[e, 8]
        c = floats[e, 0]
        t1 = floats[e, 1]
        t2 = floats[e, 2]
        t3 = floats[e, 3]
        s1 = floats[e, 4]
        s2 = floats[e, 5]
        s3 = floats[e, 6]
        z0 = -d1 if d1 < 0 else 0
        z1 = n - d1 if d1 > 0 else n
        y0 = -d2 if d2 < 0 else 0
        y1 = n - d2 if d2 > 0 else n
        x0 = -d3 if d3 < 0 else 0
        x1 = n - d3 if d3 > 0 else n
        if order == 1:
            shift_p = (po1 + pad) * np2 + (po2 + pad) * npx + po3 + pad
            shift_q = (ps1 + pad) * np2 + (ps2 + pad) * npx + ps3 + pad
        else:
            shift_p = (po1 - 1 + pad) * np2 + (po2 - 1 + pad) * npx + po3 - 1 + pad
            shift_q = (ps1 - 1 + pad) * np2 + (ps2 - 1 + pad) * npx + ps3 - 1 + pad
        a1 = _cubic(t1)
        a2 = _cubic(t2)
        a3 = _cubic(t3)
        b1 = _cubic(s1)
        b2 = _cubic(s2)
        b3 = _cubic(s3)
        u1l = 1.0 - t1
        u2l = 1.0 - t2
        u3l = 1.0 - t3
        v1l = 1.0 - s1
        v2l = 1.0 - s2
        v3l = 1.0 - s3
        for iz in range(z0, z1):
            for iy in range(y0, y1):
                base = iz * np2 + iy * npx
                ob = (iz * n + iy) * n
                for ix in range(x0, x1):
                    cell = base + ix
                    jp = cell + shift_p
                    js = cell + shift_q
                    fp = 0.0
                    gp = 0.0
                    fq = 0.0
                    gq = 0.0
                    if order == 1:
                        for a in range(2):
                            wa = u1l if a == 0 else t1
                            va = v1l if a == 0 else s1
                            for b in range(2):
                                wb = wa * (u2l if b == 0 else t2)
                                vb = va * (v2l if b == 0 else s2)
                                idx = jp + a * np2 + b * npx
                                jdx = js + a * np2 + b * npx
                                fp += wb * (u3l * fpad[idx] + t3 * fpad[idx + 1])
                                gp += wb * (u3l * gpad[idx] + t3 * gpad[idx + 1])
                                fq += vb * (v3l * fpad[jdx] + s3 * fpad[jdx + 1])
                                gq += vb * (v3l * gpad[jdx] + s3 * gpad[jdx + 1])
                    else:
                        for a in range(4):
                            for b in range(4):
                                wab = bxw(a1, a) * bxw(a2, b)
                                vab = bxw(b1, a) * bxw(b2, b)
                                idx = jp + a * np2 + b * npx
                                jdx = js + a * np2 + b * npx
                                rowf = 0.0
                                rowg = 0.0
                                qf = 0.0
                                qg = 0.0
                                for cpos in range(4):
                                    rowf += bxw(a3, cpos) * fpad[idx + cpos]
                                    rowg += bxw(a3, cpos) * gpad[idx + cpos]
                                    qf += bxw(b3, cpos) * fpad[jdx + cpos]
                                    qg += bxw(b3, cpos) * gpad[jdx + cpos]
                                fp += wab * rowf
                                gp += wab * rowg
                                fq += vab * qf
                                gq += vab * qg
                    out[ob + ix] += c * (gq * fp + gp * fq)


@numba.njit(cache=True)
def deposit3(ints, floats, fpad, gpad, n, npx, pad, order, out):
    """Scatter form of the gain term on a 3-d lattice."""
    m = ints.shape[0]
    np2 = npx * npx
    for e in range(m):
        d1 = ints[e, 0]
        d2 = ints[e, 1]
        d3 = ints[e, 2]
        po1 = ints[e, 3]
        po2 = ints[e, 4]
        po3 = ints[e, 5]
        ps1 = ints[e, 6]
        ps2 = ints[e, 7]
        ps3 = ints[e, 8]
        c = floats[e, 0]
        t1 = floats[e, 1]
        t2 = floats[e, 2]
        t3 = floats[e, 3]
        s1 = floats[e, 4]
        s2 = floats[e, 5]
        s3 = floats[e, 6]
        z0 = -d1 if d1 < 0 else 0
        z1 = n - d1 if d1 > 0 else n
        y0 = -d2 if d2 < 0 else 0
        y1 = n - d2 if d2 > 0 else n
        x0 = -d3 if d3 < 0 else 0
        x1 = n - d3 if d3 > 0 else n
        if order == 1:
            shift_p = (po1 + pad) * np2 + (po2 + pad) * npx + po3 + pad
            shift_q = (ps1 + pad) * np2 + (ps2 + pad) * npx + ps3 + pad
        else:
            shift_p = (po1 - 1 + pad) * np2 + (po2 - 1 + pad) * npx + po3 - 1 + pad
            shift_q = (ps1 - 1 + pad) * np2 + (ps2 - 1 + pad) * npx + ps3 - 1 + pad
        shift_s = (d1 + pad) * np2 + (d2 + pad) * npx + d3 + pad
        shift_f = pad * np2 + pad * npx + pad
        a1 = _cubic(t1)
        a2 = _cubic(t2)
        a3 = _cubic(t3)
        b1 = _cubic(s1)
        b2 = _cubic(s2)
        b3 = _cubic(s3)
        u1l = 1.0 - t1
        u2l = 1.0 - t2
        u3l = 1.0 - t3
        v1l = 1.0 - s1
        v2l = 1.0 - s2
        v3l = 1.0 - s3
        for iz in range(z0, z1):
            for iy in range(y0, y1):
                base = iz * np2 + iy * npx
                for ix in range(x0, x1):
                    cell = base + ix
                    fv = fpad[cell + shift_f]
                    gv = gpad[cell + shift_f]
                    fs = fpad[cell + shift_s]
                    gs = gpad[cell + shift_s]
                    ap = c * gs * fv
                    aq = c * gv * fs
                    jp = cell + shift_p
                    js = cell + shift_q
                    if order == 1:
                        for a in range(2):
                            wa = (u1l if a == 0 else t1) * ap
                            va = (v1l if a == 0 else s1) * aq
                            for b in range(2):
                                wb = wa * (u2l if b == 0 else t2)
                                vb = va * (v2l if b == 0 else s2)
                                idx = jp + a * np2 + b * npx
                                jdx = js + a * np2 + b * npx
                                out[idx] += wb * u3l
                                out[idx + 1] += wb * t3
                                out[jdx] += vb * v3l
                                out[jdx + 1] += vb * s3
                    else:
                        for a in range(4):
                            for b in range(4):
                                wab = bxw(a1, a) * bxw(a2, b) * ap
                                vab = bxw(b1, a) * bxw(b2, b) * aq
                                idx = jp + a * np2 + b * npx
                                jdx = js + a * np2 + b * npx
                                for cpos in range(4):
                                    out[idx + cpos] += wab * bxw(a3, cpos)
                                    out[jdx + cpos] += vab * bxw(b3, cpos)


@numba.njit(cache=True)
def entropy3(ints, floats, fpad, n, npx, pad, order, log_cap):
    """Entropy dissipation sum on a 3-d lattice; see entropy2."""
    m = ints.shape[0]
    np2 = npx * npx
    acc = 0.0
    clamped = 0
    for e in range(m):
        d1 = ints[e, 0]
        d2 = ints[e, 1]
        d3 = ints[e, 2]
        po1 = ints[e, 3]
        po2 = ints[e, 4]
        po3 = ints[e, 5]
        ps1 = ints[e, 6]
        ps2 = ints[e, 7]
        ps3 = ints[e, 8]
        c = floats[e, 0]
        t1 = floats[e, 1]
        t2 = floats[e, 2]
        t3 = floats[e, 3]
        s1 = floats[e, 4]
        s2 = floats[e, 5]
        s3 = floats[e, 6]
        z0 = -d1 if d1 < 0 else 0
        z1 = n - d1 if d1 > 0 else n
        y0 = -d2 if d2 < 0 else 0
        y1 = n - d2 if d2 > 0 else n
        x0 = -d3 if d3 < 0 else 0
        x1 = n - d3 if d3 > 0 else n
        if order == 1:
            shift_p = (po1 + pad) * np2 + (po2 + pad) * npx + po3 + pad
            shift_q = (ps1 + pad) * np2 + (ps2 + pad) * npx + ps3 + pad
        else:
            shift_p = (po1 - 1 + pad) * np2 + (po2 - 1 + pad) * npx + po3 - 1 + pad
            shift_q = (ps1 - 1 + pad) * np2 + (ps2 - 1 + pad) * npx + ps3 - 1 + pad
        shift_s = (d1 + pad) * np2 + (d2 + pad) * npx + d3 + pad
        shift_f = pad * np2 + pad * npx + pad
        a1 = _cubic(t1)
        a2 = _cubic(t2)
        a3 = _cubic(t3)
        b1 = _cubic(s1)
        b2 = _cubic(s2)
        b3 = _cubic(s3)
        u1l = 1.0 - t1
        u2l = 1.0 - t2
        u3l = 1.0 - t3
        v1l = 1.0 - s1
        v2l = 1.0 - s2
        v3l = 1.0 - s3
        for iz in range(z0, z1):
            for iy in range(y0, y1):
                base = iz * np2 + iy * npx
                for ix in range(x0, x1):
                    cell = base + ix
                    fv = fpad[cell + shift_f]
                    fs = fpad[cell + shift_s]
                    jp = cell + shift_p
                    js = cell + shift_q
                    fp = 0.0
                    fq = 0.0
                    if order == 1:
                        for a in range(2):
                            wa = u1l if a == 0 else t1
                            va = v1l if a == 0 else s1
                            for b in range(2):
                                wb = wa * (u2l if b == 0 else t2)
                                vb = va * (v2l if b == 0 else s2)
                                idx = jp + a * np2 + b * npx
                                jdx = js + a * np2 + b * npx
                                fp += wb * (u3l * fpad[idx] + t3 * fpad[idx + 1])
                                fq += vb * (v3l * fpad[jdx] + s3 * fpad[jdx + 1])
                    else:
                        for a in range(4):
                            for b in range(4):
                                wab = bxw(a1, a) * bxw(a2, b)
                                vab = bxw(b1, a) * bxw(b2, b)
                                idx = jp + a * np2 + b * npx
                                jdx = js + a * np2 + b * npx
                                rowf = 0.0
                                qf = 0.0
                                for cpos in range(4):
                                    rowf += bxw(a3, cpos) * fpad[idx + cpos]
                                    qf += bxw(b3, cpos) * fpad[jdx + cpos]
                                fp += wab * rowf
                                fq += vab * qf
                    post = fp * fq
                    pre = fv * fs
                    diff = post - pre
                    if diff == 0.0:
                        continue
                    if post > 0.0 and pre > 0.0:
                        lr = np.log(post / pre)
                        if lr > log_cap:
                            lr = log_cap
                            clamped += 1
                        elif lr < -log_cap:
                            lr = -log_cap
                            clamped += 1
                    else:
                        lr = log_cap if diff > 0.0 else -log_cap
                        clamped += 1
                    acc += c * diff * lr
    return acc, clamped
