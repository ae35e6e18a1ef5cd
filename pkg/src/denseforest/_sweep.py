"""Numba kernels for the line sweep behind the visibility estimator.

Every line is given by a direction index k (unit direction e_k, normal n_k = e_k rotated by
a quarter turn) and a perpendicular offset o, and is clipped to the box |x|, |y| <= R.
For each clearance level eps' the kernels report the longest sub-segment of the clipped
line that stays at distance >= eps' from every point, and where it starts.
"""
from __future__ import annotations

import numpy as np
from numba import njit, prange


@njit(cache=True)
def _clip_axis(e, nn, o, R, lo, hi):
    if abs(e) < 1e-15:
        if abs(o * nn) > R:
            return 1.0, -1.0
        return lo, hi
    a1 = (-R - o * nn) / e
    a2 = (R - o * nn) / e
    if a1 > a2:
        a1, a2 = a2, a1
    return max(lo, a1), min(hi, a2)


@njit(cache=True)
def chord(ex, ey, o, R):
    """Parameter interval [lo, hi] of the line o*n + a*e inside the box."""
    lo, hi = _clip_axis(ex, -ey, o, R, -np.inf, np.inf)
    return _clip_axis(ey, ex, o, R, lo, hi)


@njit(cache=True)
def _gaps(a, c, count, lo, hi, eps_p, out_len, out_start, row):
    starts = np.empty(count)
    ends = np.empty(count)
    for e in range(eps_p.size):
        ep = eps_p[e]
        m = 0
        for k in range(count):
            if abs(c[k]) < ep:
                w = np.sqrt(ep * ep - c[k] * c[k])
                starts[m] = a[k] - w
                ends[m] = a[k] + w
                m += 1
        order = np.argsort(starts[:m])
        cur = lo
        best = 0.0
        bstart = lo
        for idx in range(m):
            k = order[idx]
            if starts[k] > cur:
                g = min(starts[k], hi) - cur
                if g > best:
                    best = g
                    bstart = cur
            if ends[k] > cur:
                cur = ends[k]
            if cur >= hi:
                break
        if hi - cur > best:
            best = hi - cur
            bstart = cur
        out_len[row, e] = best
        out_start[row, e] = bstart


@njit(parallel=True, cache=True)
def union_scan(dir_index, offsets, cosines, sines, bases, shifts, R, eps_p):
    """Lines against a union of 2-d grids; bases[g] holds a reduced basis as columns and
    shifts[g] the grid shift relative to the window centre."""
    n_lines = dir_index.size
    n_eps = eps_p.size
    n_grids = bases.shape[0]
    out_len = np.zeros((n_lines, n_eps))
    out_start = np.zeros((n_lines, n_eps))
    w = eps_p.max()
    for line in prange(n_lines):
        k = dir_index[line]
        ex = cosines[k]
        ey = sines[k]
        nx = -ey
        ny = ex
        o = offsets[line]
        lo, hi = chord(ex, ey, o, R)
        if hi <= lo:
            continue
        par = np.empty((n_grids, 11))
        cap = 0
        for g in range(n_grids):
            a1 = bases[g, 0, 0] * ex + bases[g, 1, 0] * ey
            c1 = bases[g, 0, 0] * nx + bases[g, 1, 0] * ny
            a2 = bases[g, 0, 1] * ex + bases[g, 1, 1] * ey
            c2 = bases[g, 0, 1] * nx + bases[g, 1, 1] * ny
            if abs(c1) > abs(c2):
                a1, c1, a2, c2 = a2, c2, a1, c1
            a0 = shifts[g, 0] * ex + shifts[g, 1] * ey
            c0 = shifts[g, 0] * nx + shifts[g, 1] * ny - o
            base_a = a0 - a2 * c0 / c2
            slope = a1 - a2 * c1 / c2
            spread = abs(a2) * w / abs(c2)
            t1 = (lo - w - spread - base_a) / slope
            t2 = (hi + w + spread - base_a) / slope
            if t1 > t2:
                t1, t2 = t2, t1
            ilo = np.ceil(t1)
            ihi = np.floor(t2)
            jw = w / abs(c2)
            par[g, 0] = a0
            par[g, 1] = c0
            par[g, 2] = a1
            par[g, 3] = c1
            par[g, 4] = a2
            par[g, 5] = c2
            par[g, 6] = ilo
            par[g, 7] = ihi
            par[g, 8] = jw
            if ihi >= ilo:
                cap += int(ihi - ilo + 1) * (int(2 * jw) + 2)
        a_buf = np.empty(cap)
        c_buf = np.empty(cap)
        count = 0
        for g in range(n_grids):
            a0, c0, a1, c1, a2, c2 = par[g, 0], par[g, 1], par[g, 2], par[g, 3], par[g, 4], par[g, 5]
            jw = par[g, 8]
            i = par[g, 6]
            while i <= par[g, 7]:
                jstar = (-c0 - i * c1) / c2
                j = np.ceil(jstar - jw)
                jh = np.floor(jstar + jw)
                while j <= jh:
                    c = c0 + i * c1 + j * c2
                    if abs(c) < w:
                        a = a0 + i * a1 + j * a2
                        if a > lo - w and a < hi + w:
                            a_buf[count] = a
                            c_buf[count] = c
                            count += 1
                    j += 1.0
                i += 1.0
        _gaps(a_buf, c_buf, count, lo, hi, eps_p, out_len, out_start, line)
    return out_len, out_start


@njit(parallel=True, cache=True)
def cloud_scan(points, dir_ptr, offsets, cosines, sines, R, eps_p):
    """Lines against an explicit point cloud given relative to the window centre; lines of
    direction k occupy offsets[dir_ptr[k]:dir_ptr[k + 1]]."""
    n_lines = offsets.size
    n_eps = eps_p.size
    out_len = np.zeros((n_lines, n_eps))
    out_start = np.zeros((n_lines, n_eps))
    w = eps_p.max()
    n_dirs = dir_ptr.size - 1
    n = points.shape[0]
    for k in prange(n_dirs):
        if dir_ptr[k + 1] == dir_ptr[k]:
            continue
        ex = cosines[k]
        ey = sines[k]
        perp = np.empty(n)
        along = np.empty(n)
        for p in range(n):
            perp[p] = -points[p, 0] * ey + points[p, 1] * ex
            along[p] = points[p, 0] * ex + points[p, 1] * ey
        order = np.argsort(perp)
        perp_sorted = perp[order]
        for line in range(dir_ptr[k], dir_ptr[k + 1]):
            o = offsets[line]
            lo, hi = chord(ex, ey, o, R)
            if hi <= lo:
                continue
            i0 = np.searchsorted(perp_sorted, o - w)
            i1 = np.searchsorted(perp_sorted, o + w)
            a_buf = np.empty(i1 - i0)
            c_buf = np.empty(i1 - i0)
            count = 0
            for idx in range(i0, i1):
                p = order[idx]
                a = along[p]
                if a > lo - w and a < hi + w:
                    a_buf[count] = a
                    c_buf[count] = perp[p] - o
                    count += 1
            _gaps(a_buf, c_buf, count, lo, hi, eps_p, out_len, out_start, line)
    return out_len, out_start
