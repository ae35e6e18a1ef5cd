"""Closest pair in a point cloud by uniform-grid spatial hashing (compiled)."""
from __future__ import annotations

import itertools
import math

import numpy as np
from numba import njit

DENSE_CELL_LIMIT = 64_000_000


@njit(cache=True)
def _bucket(points, lo, h, radix):
    n, dim = points.shape
    keys = np.empty(n, dtype=np.int64)
    for i in range(n):
        k = 0
        for a in range(dim):
            k += (np.int64(math.floor((points[i, a] - lo[a]) / h)) + 1) * radix[a]
        keys[i] = k
    return keys


@njit(cache=True)
def _dense_closest(points, keys, ncell, offsets, limit):
    n, dim = points.shape
    starts = np.zeros(ncell + 1, dtype=np.int64)
    for i in range(n):
        starts[keys[i] + 1] += 1
    for c in range(ncell):
        starts[c + 1] += starts[c]
    fill = starts[:-1].copy()
    srt = np.empty_like(points)
    for i in range(n):
        p = fill[keys[i]]
        fill[keys[i]] += 1
        for a in range(dim):
            srt[p, a] = points[i, a]
    best = limit * limit
    for c in range(ncell):
        s0, e0 = starts[c], starts[c + 1]
        if s0 == e0:
            continue
        for o in range(offsets.shape[0]):
            t = c + offsets[o]
            s1, e1 = starts[t], starts[t + 1]
            for i in range(s0, e0):
                j0 = i + 1 if offsets[o] == 0 else s1
                for j in range(j0, e1):
                    acc = 0.0
                    for a in range(dim):
                        diff = srt[i, a] - srt[j, a]
                        acc += diff * diff
                    if acc < best:
                        best = acc
    return math.sqrt(best)


@njit(cache=True)
def _search(keys, target):
    lo, hi = 0, keys.shape[0]
    while lo < hi:
        mid = (lo + hi) // 2
        if keys[mid] < target:
            lo = mid + 1
        else:
            hi = mid
    if lo < keys.shape[0] and keys[lo] == target:
        return lo
    return -1


@njit(cache=True)
def _sparse_closest(pts, cell_keys, starts, offsets, limit):
    best = limit * limit
    dim = pts.shape[1]
    for c in range(cell_keys.shape[0]):
        s0, e0 = starts[c], starts[c + 1]
        for o in range(offsets.shape[0]):
            if offsets[o] == 0:
                t = c
            else:
                t = _search(cell_keys, cell_keys[c] + offsets[o])
                if t < 0:
                    continue
            s1, e1 = starts[t], starts[t + 1]
            for i in range(s0, e0):
                j0 = i + 1 if offsets[o] == 0 else s1
                for j in range(j0, e1):
                    acc = 0.0
                    for a in range(dim):
                        diff = pts[i, a] - pts[j, a]
                        acc += diff * diff
                    if acc < best:
                        best = acc
    return math.sqrt(best)


def closest_below(points: np.ndarray, h: float) -> float:
    """Smallest pairwise distance if some pair is closer than h, otherwise h.

    Cells have side h, so any pair closer than h sits in the same or adjacent cells.
    """
    n, dim = points.shape
    lo = points.min(axis=0)
    spans_f = np.floor((points.max(axis=0) - lo) / h) + 3
    ncell = float(np.prod(spans_f))
    if not ncell <= 2.0 ** 62:
        raise OverflowError("cell grid too fine for 64-bit keys")
    spans = spans_f.astype(np.int64)
    radix = np.ones(dim, dtype=np.int64)
    for a in range(dim - 2, -1, -1):
        radix[a] = radix[a + 1] * spans[a + 1]
    keys = _bucket(points, lo, h, radix)
    half = [o for o in itertools.product((-1, 0, 1), repeat=dim) if o > (0,) * dim or not any(o)]
    offsets = np.array([int(np.dot(o, radix)) for o in half], dtype=np.int64)
    if ncell <= max(DENSE_CELL_LIMIT, 4 * n):
        return _dense_closest(points, keys, int(ncell), offsets, h)
    order = np.argsort(keys, kind="stable")
    keys = keys[order]
    starts = np.flatnonzero(np.r_[True, keys[1:] != keys[:-1]])
    cell_keys = keys[starts]
    starts = np.append(starts, n).astype(np.int64)
    return _sparse_closest(np.ascontiguousarray(points[order]), cell_keys, starts, offsets, h)
