"""Exact closest-vector distances by depth-first enumeration (compiled)."""
from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _offset(n: int, sgn: float) -> float:
    # 0, s, -s, 2s, -2s, ... so |c - centre| never decreases along the walk
    if n == 0:
        return 0.0
    m = (n + 1) // 2
    return m * sgn if n % 2 == 1 else -m * sgn


@njit(cache=True)
def _closest_sq(r: np.ndarray, y: np.ndarray, best: float) -> float:
    # minimise |r c - y|^2 over integer c with r upper triangular
    d = r.shape[0]
    c = np.zeros(d)
    centre = np.zeros(d)
    base = np.zeros(d)
    sgn = np.ones(d)
    count = np.zeros(d, dtype=np.int64)
    partial = np.zeros(d + 1)
    k = d - 1
    centre[k] = y[k] / r[k, k]
    base[k] = np.round(centre[k])
    sgn[k] = 1.0 if centre[k] >= base[k] else -1.0
    c[k] = base[k]
    while True:
        diff = (c[k] - centre[k]) * r[k, k]
        val = partial[k + 1] + diff * diff
        if val <= best and k > 0:
            partial[k] = val
            k -= 1
            s = y[k]
            for j in range(k + 1, d):
                s -= r[k, j] * c[j]
            centre[k] = s / r[k, k]
            base[k] = np.round(centre[k])
            sgn[k] = 1.0 if centre[k] >= base[k] else -1.0
            count[k] = 0
            c[k] = base[k]
            continue
        if val <= best:
            best = val
            count[0] += 1
            c[0] = base[0] + _offset(count[0], sgn[0])
            continue
        k += 1
        if k == d:
            break
        count[k] += 1
        c[k] = base[k] + _offset(count[k], sgn[k])
    return best


@njit(cache=True)
def closest_distances(r: np.ndarray, ys: np.ndarray, bound_sq: float) -> np.ndarray:
    out = np.empty(ys.shape[0])
    for i in range(ys.shape[0]):
        out[i] = math.sqrt(_closest_sq(r, ys[i], bound_sq))
    return out
