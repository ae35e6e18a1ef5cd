"""Constructions of dense forests and other point sets, plus separation checks."""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from ._pairs import closest_below
from .errors import BudgetExceededError, SpecError
from .exact import SQRT2, SQRT3, SQRT6, Biquadratic
from .lattice import (DEFAULT_POINT_BUDGET, Grid, Lattice, Window, _invertible, enumerate_points,
                      estimate_point_count, grid_from_json, grid_to_json, same_grid)

PHI = (1 + math.sqrt(5)) / 2
DEDUP_TOL = 1e-9
SECTION_SEPARATION = 1e-6


# ---------------------------------------------------------------- spec types

@dataclass(frozen=True, eq=False)
class UnionOfGrids:
    grids: tuple
    kind: str = field(default="union_of_grids", init=False)

    @property
    def dim(self) -> int:
        return self.grids[0].dim


@dataclass(frozen=True, eq=False)
class CutProjectSpec:
    """Lattice ``lattice_shift + Z^N`` cut along ``int_basis`` and projected onto ``phys_basis``.

    Internal coordinates w are taken with respect to the columns of int_basis and
    must lie in the box [window_lo, window_hi].
    """

    phys_basis: np.ndarray
    int_basis: np.ndarray
    lattice_shift: np.ndarray
    window_lo: np.ndarray
    window_hi: np.ndarray
    kind: str = field(default="cut_project", init=False)

    def __post_init__(self):
        phys = np.atleast_2d(np.asarray(self.phys_basis, dtype=float))
        internal = np.asarray(self.int_basis, dtype=float)
        if internal.ndim == 1:
            internal = internal[:, None]
        big_n = phys.shape[0]
        if internal.shape[0] != big_n or phys.shape[1] + internal.shape[1] != big_n:
            raise SpecError("physical and internal bases must together span R^N")
        shift = np.zeros(big_n) if self.lattice_shift is None else np.asarray(self.lattice_shift, float)
        lo = np.atleast_1d(np.asarray(self.window_lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.window_hi, dtype=float))
        if lo.shape != (internal.shape[1],) or hi.shape != lo.shape or shift.shape != (big_n,):
            raise SpecError("window bounds or shift have the wrong length")
        for name, val in (("phys_basis", phys), ("int_basis", internal),
                          ("lattice_shift", shift), ("window_lo", lo), ("window_hi", hi)):
            val = np.array(val)
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        _invertible(self.full_basis)

    @property
    def N(self) -> int:
        return self.phys_basis.shape[0]

    @property
    def n(self) -> int:
        return self.phys_basis.shape[1]

    @property
    def dim(self) -> int:
        return self.n

    @property
    def full_basis(self) -> np.ndarray:
        return np.hstack([self.phys_basis, self.int_basis])


@dataclass(frozen=True, eq=False)
class Section:
    """Finitely many closed segments in R^3, read modulo Z^3."""

    segments: tuple

    def __post_init__(self):
        segs = []
        for seg in self.segments:
            a, b = (np.asarray(p, dtype=float) for p in seg)
            if a.shape != (3,) or b.shape != (3,):
                raise SpecError("section segments need endpoints in R^3")
            if np.linalg.norm(b - a) == 0:
                raise SpecError("degenerate segment of length zero")
            segs.append((a, b))
        object.__setattr__(self, "segments", tuple(segs))
        if self.separation() < SECTION_SEPARATION:
            raise SpecError("section segments intersect modulo Z^3")

    def separation(self, steps: int = 1000) -> float:
        """Smallest sampled distance in T^3 between two different segments."""
        best = math.inf
        for i, (a, b) in enumerate(self.segments):
            t = np.linspace(0.0, 1.0, steps + 1)[:, None]
            samples = a + t * (b - a)
            for j, other in enumerate(self.segments):
                if j != i:
                    best = min(best, float(torus_distance_to_segments(samples, [other]).min()))
        return best

    @property
    def directions(self) -> np.ndarray:
        return np.array([b - a for a, b in self.segments])


@dataclass(frozen=True, eq=False)
class ToralVisitSpec:
    section: Section
    plane: np.ndarray
    base_point: np.ndarray
    kind: str = field(default="toral_visit", init=False)

    def __post_init__(self):
        plane = np.asarray(self.plane, dtype=float)
        if plane.shape != (2, 3) or np.linalg.matrix_rank(plane) < 2:
            raise SpecError("plane must be a rank-2 matrix of shape (2, 3)")
        object.__setattr__(self, "plane", plane)
        object.__setattr__(self, "base_point", np.asarray(self.base_point, dtype=float).reshape(3))

    @property
    def dim(self) -> int:
        return 2


@dataclass(frozen=True, eq=False)
class TbgSpec:
    k: int
    angles: tuple
    shifts: tuple
    kind: str = field(default="tbg", init=False)

    @property
    def dim(self) -> int:
        return 2


ForestSpec = Union[UnionOfGrids, CutProjectSpec, ToralVisitSpec, TbgSpec]


@dataclass(frozen=True, eq=False)
class PointCloud:
    dim: int
    points: np.ndarray
    provenance: dict

    def __len__(self):
        return len(self.points)


# ---------------------------------------------------------------- forests

def union_of_grids(grids: Sequence[Grid]) -> UnionOfGrids:
    kept: list[Grid] = []
    for g in grids:
        if not any(same_grid(g, h) for h in kept):
            kept.append(g)
    return UnionOfGrids(tuple(kept))


def peres_forest() -> UnionOfGrids:
    return union_of_grids([
        Grid(Lattice(np.eye(2))),
        Grid(Lattice([[1.0, 0.0], [PHI, 1.0]])),
        Grid(Lattice([[PHI, 1.0], [1.0, 0.0]])),
    ])


def shear_matrix(theta: np.ndarray) -> np.ndarray:
    """[[1, 0], [theta, I]] acting on R^(d+1)."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    d = theta.shape[0]
    m = np.eye(d + 1)
    m[1:, 0] = theta
    return m


def cyclic_shift(n: int) -> np.ndarray:
    """Matrix of (x1, ..., xn) -> (x2, ..., xn, x1)."""
    return np.roll(np.eye(n), 1, axis=1)


def generalized_forest(theta) -> UnionOfGrids:
    """Union over rotations j and rows theta_i of J^j M(theta_i) Z^(d+1).

    ``theta`` has one row per shear vector; a flat sequence means d = 1.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.ndim == 1:
        theta = theta[:, None]
    s, d = theta.shape
    n = d + 1
    jmat = cyclic_shift(n)
    grids = []
    power = np.eye(n)
    for _ in range(n):
        for row in theta:
            grids.append(Grid(Lattice(power @ shear_matrix(row))))
        power = jmat @ power
    return union_of_grids(grids)


@dataclass(frozen=True)
class ThreeLatticeConstants:
    alpha: Biquadratic
    beta: Biquadratic
    gamma: Biquadratic
    delta: Biquadratic

    def identity_product(self) -> Biquadratic:
        return (self.alpha + self.gamma) * (self.beta + self.delta)

    def identity_ratio(self) -> Biquadratic:
        return self.gamma / (self.delta * (self.alpha + self.gamma))


THREE_LATTICE = ThreeLatticeConstants(
    alpha=SQRT2,
    beta=Biquadratic(3, -1, 1, -1),
    gamma=SQRT3,
    delta=Biquadratic(-3, 0, 0, 1),
)

# half-width of the band of Lambda_2 - Lambda_3 lines around the attained closest pair
THREE_LATTICE_GAP = 0.25


def _three_lattice_bases():
    a, b, g, dl = (float(x) for x in (THREE_LATTICE.alpha, THREE_LATTICE.beta,
                                     THREE_LATTICE.gamma, THREE_LATTICE.delta))
    return np.eye(2), np.array([[g, a], [0.0, 1.0]]), np.array([[1.0, 0.0], [b, dl]])


def three_lattice_shifts(gap: float = THREE_LATTICE_GAP) -> tuple[np.ndarray, np.ndarray]:
    """Shifts for the second and third grids.

    x2 = (0, 1/2) keeps Z^2 and x2 + Lambda_2 on interleaved horizontal lines.
    x3 puts the point x3 + (1, beta) exactly ``gap`` away from x2 + (alpha, 1), measured
    across the parallel lines carrying Lambda_2 - Lambda_3, so the smallest distance
    between those two grids is attained instead of only approached.
    """
    _, b2, b3 = _three_lattice_bases()
    x2 = np.array([0.0, 0.5])
    a_plus_g = float(THREE_LATTICE.alpha + THREE_LATTICE.gamma)
    normal = np.array([-1.0, a_plus_g]) / math.hypot(1.0, a_plus_g)
    x3 = x2 + b2[:, 1] - gap * normal - b3[:, 0]
    return x2, x3


def three_lattice_forest(shifts: tuple | None = None) -> UnionOfGrids:
    b1, b2, b3 = _three_lattice_bases()
    x2, x3 = three_lattice_shifts() if shifts is None else (np.asarray(s, float) for s in shifts)
    return UnionOfGrids((Grid(Lattice(b1)), Grid(Lattice(b2), x2), Grid(Lattice(b3), x3)))


HONEYCOMB = np.array([[1.0, 0.5], [0.0, math.sqrt(3) / 2]])


def rotation(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def tbg_union(k: int, angles: Sequence[float], shifts: Sequence | None = None) -> UnionOfGrids:
    """Union of k rotated and shifted copies of the honeycomb lattice."""
    if len(angles) != k:
        raise SpecError(f"expected {k} angles, got {len(angles)}")
    if shifts is None:
        shifts = [np.zeros(2)] * k
    if len(shifts) != k:
        raise SpecError(f"expected {k} shifts, got {len(shifts)}")
    grids = [Grid(Lattice(rotation(t) @ HONEYCOMB), np.asarray(x, float)) for t, x in zip(angles, shifts)]
    return union_of_grids(grids)


def expand_tbg(spec: TbgSpec) -> UnionOfGrids:
    return tbg_union(spec.k, spec.angles, spec.shifts)


# ---------------------------------------------------------------- cut and project

def _best_eliminated(g_int: np.ndarray) -> tuple[list[int], list[int]]:
    k, big_n = g_int.shape
    best, best_det = None, -1.0
    for combo in itertools.combinations(range(big_n), k):
        det = abs(np.linalg.det(g_int[:, combo]))
        if det > best_det + 1e-15:
            best, best_det = combo, det
    elim = list(best)
    return elim, [j for j in range(big_n) if j not in elim]


def cut_and_project(spec: CutProjectSpec, window: Window, budget: int = DEFAULT_POINT_BUDGET,
                    return_lattice: bool = False):
    """Points of the model set inside the physical window, in physical-basis coordinates.

    Free lattice coordinates run over the box hull of the pulled-back region projected
    away from the internal directions; the eliminated coordinates are solved from the
    internal window, so the work is proportional to the physical window, not its hull.
    """
    big_n, n = spec.N, spec.n
    if window.dim != n:
        raise SpecError(f"window has dimension {window.dim}, physical space has {n}")
    lo, hi = spec.window_lo, spec.window_hi
    empty_pts = np.empty((0, n))
    if np.any(lo > hi):
        out = (empty_pts, np.empty((0, big_n), dtype=np.int64))
        return out if return_lattice else empty_pts
    full = spec.full_basis
    inv = _invertible(full)
    g_int = inv[n:, :]
    elim, free = _best_eliminated(g_int)
    g_e = g_int[:, elim]
    g_e_inv = np.linalg.inv(g_e)
    centre = np.concatenate([window.center, (lo + hi) / 2])
    half = np.concatenate([np.full(n, window.radius), (hi - lo) / 2])
    m_centre = full @ centre - spec.lattice_shift
    m_spread = np.abs(full) @ half
    f_lo = np.floor(m_centre[free] - m_spread[free] - 1e-9).astype(np.int64)
    f_hi = np.ceil(m_centre[free] + m_spread[free] + 1e-9).astype(np.int64)
    count = float(np.prod((f_hi - f_lo + 1).astype(float)))
    per = float(np.prod(np.ceil(np.abs(g_e_inv) @ (hi - lo)) + 1))
    scaled = _scaled_model_grid(spec, window, inv)
    if scaled is not None and estimate_point_count(*scaled[:2]) < count * per:
        return _scaled_cut_and_project(spec, window, scaled, budget, return_lattice)
    if count * per > budget:
        raise BudgetExceededError(
            f"cut-and-project enumeration would visit about {count * per:.3g} candidates", estimate=count * per)
    tol = 1e-9
    w_offset = g_int @ spec.lattice_shift
    pts_out, lat_out = [], []
    axes = [np.arange(a, b + 1) for a, b in zip(f_lo, f_hi)]
    first = axes[0] if axes else np.array([0])
    rest = axes[1:]
    rest_size = int(np.prod([len(a) for a in rest])) if rest else 1
    step = max(1, 2_000_000 // max(rest_size, 1))
    e_half = np.abs(g_e_inv) @ ((hi - lo) / 2)
    for start in range(0, len(first), step):
        if free:
            mesh = np.meshgrid(first[start:start + step], *rest, indexing="ij")
            m_free = np.stack([m.ravel() for m in mesh], axis=1)
        else:
            m_free = np.zeros((1, 0), dtype=np.int64)
        w_free = m_free @ g_int[:, free].T + w_offset
        e_centre = ((lo + hi) / 2 - w_free) @ g_e_inv.T
        e_lo = np.ceil(e_centre - e_half - tol).astype(np.int64)
        e_hi = np.floor(e_centre + e_half + tol).astype(np.int64)
        live = np.all(e_hi >= e_lo, axis=1)
        if not np.any(live):
            continue
        m_free, e_lo, e_hi = m_free[live], e_lo[live], e_hi[live]
        width = (e_hi - e_lo).max(axis=0)
        for off in itertools.product(*[range(int(w) + 1) for w in width]):
            off = np.asarray(off, dtype=np.int64)
            cand_e = e_lo + off
            ok = np.all(cand_e <= e_hi, axis=1)
            if not np.any(ok):
                continue
            m = np.empty((int(ok.sum()), big_n), dtype=np.int64)
            m[:, free] = m_free[ok]
            m[:, elim] = cand_e[ok]
            coords = (m + spec.lattice_shift) @ inv.T
            u, w = coords[:, :n], coords[:, n:]
            keep = (np.all(np.abs(u - window.center) <= window.radius + tol, axis=1)
                    & np.all(w >= lo - tol, axis=1) & np.all(w <= hi + tol, axis=1))
            pts_out.append(u[keep])
            lat_out.append(m[keep])
    pts = np.concatenate(pts_out) if pts_out else empty_pts
    lat = np.concatenate(lat_out) if lat_out else np.empty((0, big_n), dtype=np.int64)
    order = np.lexsort(pts.T[::-1]) if len(pts) else np.arange(0)
    pts, lat = pts[order], lat[order]
    return (pts, lat) if return_lattice else pts


def _scaled_model_grid(spec: CutProjectSpec, window: Window, inv: np.ndarray):
    """The model-set lattice in (physical, stretched internal) coordinates, in which the
    acceptance region becomes a cube of the physical window's radius."""
    lo, hi = spec.window_lo, spec.window_hi
    if window.radius <= 0 or np.any(hi - lo <= 0):
        return None
    stretch = np.concatenate([np.ones(spec.n), 2 * window.radius / (hi - lo)])
    grid = Grid(Lattice(stretch[:, None] * inv), stretch * (inv @ spec.lattice_shift))
    centre = stretch * np.concatenate([window.center, (lo + hi) / 2])
    return grid, Window(centre, window.radius), stretch


def _scaled_cut_and_project(spec, window, scaled, budget, return_lattice):
    grid, box, stretch = scaled
    n = spec.n
    coords = enumerate_points(grid, box, budget) / stretch
    # the stretched basis loses digits to cancellation; rebuild from the integer points
    lat = np.round(coords @ spec.full_basis.T - spec.lattice_shift)
    coords = (lat + spec.lattice_shift) @ _invertible(spec.full_basis).T
    u, w = coords[:, :n], coords[:, n:]
    tol = 1e-9
    keep = (np.all(np.abs(u - window.center) <= window.radius + tol, axis=1)
            & np.all(w >= spec.window_lo - tol, axis=1) & np.all(w <= spec.window_hi + tol, axis=1))
    u, lat = u[keep], lat[keep].astype(np.int64)
    order = np.lexsort(u.T[::-1]) if len(u) else np.arange(0)
    u, lat = u[order], lat[order]
    return (u, lat) if return_lattice else u


AXIS_CIRCLE_BASES = ((0.1, 0.2, 0.3), (0.25, 0.5, 0.55), (0.4, 0.65, 0.8))
GENERIC_PLANE = np.array([[1.0, math.sqrt(2), math.sqrt(3)], [math.sqrt(5), -1.0, math.sqrt(7)]])


def axis_circle_section() -> Section:
    """Three closed coordinate circles of T^3, one along each axis."""
    segs = [(np.array(a), np.array(a) + np.eye(3)[i]) for i, a in enumerate(AXIS_CIRCLE_BASES)]
    return Section(tuple(segs))


GOLDEN_DIRECTION = np.array([1.0, PHI, math.sqrt(2)])
GOLDEN_WIDTH = 0.02
GOLDEN_SHIFT = np.array([0.1, 0.2, 0.3])


def golden_cut_project(width: float = GOLDEN_WIDTH) -> CutProjectSpec:
    """Z^3 + shift cut along the unit vector of (1, phi, sqrt 2) with an internal
    interval of the given width, projected to its orthogonal plane."""
    v = GOLDEN_DIRECTION / np.linalg.norm(GOLDEN_DIRECTION)
    q, _ = np.linalg.qr(np.column_stack([v, np.eye(3)[:, :2]]))
    phys = q[:, 1:3]
    return CutProjectSpec(phys, v[:, None], GOLDEN_SHIFT, np.array([-width / 2]), np.array([width / 2]))


# ---------------------------------------------------------------- toral visits

def orthonormal_plane(plane: np.ndarray) -> np.ndarray:
    """Columns form an orthonormal basis of the row space of ``plane``."""
    q, _ = np.linalg.qr(np.asarray(plane, dtype=float).T)
    return q[:, :2]


def check_transverse(section: Section, plane: np.ndarray) -> None:
    basis = orthonormal_plane(plane)
    for a, b in section.segments:
        d = (b - a) / np.linalg.norm(b - a)
        if abs(np.linalg.det(np.column_stack([basis, d]))) < 1e-9:
            raise SpecError("non-transverse section: the plane contains a segment direction")


def segment_spec(a: np.ndarray, b: np.ndarray, basis: np.ndarray, x0: np.ndarray) -> CutProjectSpec:
    # v + x0 = m + t(b - a) + a  <=>  v = (m - x0 + a) + (-t)(b - a)
    return CutProjectSpec(basis, (b - a)[:, None], a - x0, np.array([-1.0]), np.array([0.0]))


def toral_visit_set(section: Section, plane, x0, window: Window) -> PointCloud:
    """Times v in the plane at which x0 + v, read in T^3, lies on the section."""
    plane = np.asarray(plane, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    check_transverse(section, plane)
    basis = orthonormal_plane(plane)
    pts, labels = [], []
    for idx, (a, b) in enumerate(section.segments):
        p = cut_and_project(segment_spec(a, b, basis, x0), window)
        pts.append(p)
        labels.append(np.full(len(p), idx))
    points = np.concatenate(pts) if pts else np.empty((0, 2))
    prov = {"kind": "toral_visit", "plane_basis": basis.T.tolist(), "base_point": x0.tolist(),
            "segment_index": np.concatenate(labels).tolist() if labels else []}
    return PointCloud(2, points, prov)


def torus_distance_to_section(points3: np.ndarray, section: Section) -> np.ndarray:
    """Distance in T^3 from each point to the nearest point of the section."""
    return torus_distance_to_segments(points3, section.segments)


def torus_distance_to_segments(points3: np.ndarray, segments) -> np.ndarray:
    pts = np.atleast_2d(points3)
    best = np.full(len(pts), np.inf)
    for a, b in segments:
        d = b - a
        y = np.mod(pts - a, 1.0)
        span_lo = np.floor(np.minimum(0.0, -d)) - 1
        span_hi = np.ceil(np.maximum(0.0, -d)) + 1
        shifts = itertools.product(*[range(int(l), int(h) + 1) for l, h in zip(span_lo, span_hi)])
        dd = d @ d
        for m in shifts:
            rel = y - np.asarray(m, float)
            t = np.clip(rel @ d / dd, 0.0, 1.0)
            best = np.minimum(best, np.linalg.norm(rel - t[:, None] * d, axis=1))
    return best


# ---------------------------------------------------------------- generation

def generate(spec: ForestSpec, window: Window, budget: int = DEFAULT_POINT_BUDGET) -> PointCloud:
    if isinstance(spec, TbgSpec):
        spec = expand_tbg(spec)
    if isinstance(spec, UnionOfGrids):
        total = sum(estimate_point_count(g, window) for g in spec.grids)
        if total > budget:
            raise BudgetExceededError(f"union would enumerate about {total:.3g} candidates", estimate=total)
        parts = []
        for i, g in enumerate(spec.grids):
            pts = enumerate_points(g, window, budget)
            for earlier in spec.grids[:i]:
                pts = pts[~grid_membership(earlier, pts)]
            parts.append(pts)
        pts = np.concatenate(parts) if parts else np.empty((0, window.dim))
        return PointCloud(window.dim, pts, {"kind": "union_of_grids", "grids": len(spec.grids)})
    if isinstance(spec, CutProjectSpec):
        return PointCloud(spec.n, cut_and_project(spec, window, budget), {"kind": "cut_project"})
    if isinstance(spec, ToralVisitSpec):
        return toral_visit_set(spec.section, spec.plane, spec.base_point, window)
    raise SpecError(f"unknown spec type {type(spec).__name__}")


def grid_membership(grid: Grid, points: np.ndarray, tol: float = DEDUP_TOL) -> np.ndarray:
    """Mask of points lying on the grid (integral coefficients up to tol)."""
    coeffs = (points - grid.shift) @ _invertible(grid.basis).T
    return np.all(np.abs(coeffs - np.round(coeffs)) <= tol * np.maximum(1.0, np.abs(coeffs)), axis=1)


def dedupe(points: np.ndarray, tol: float = DEDUP_TOL) -> np.ndarray:
    """Drop repeated points (coincident up to ``tol``), keeping sorted order."""
    if len(points) == 0:
        return points
    keys = np.round(points / tol).astype(np.int64)
    _, idx = np.unique(keys, axis=0, return_index=True)
    return points[np.sort(idx)]


def min_pairwise_distance(points: np.ndarray) -> float:
    pts = np.ascontiguousarray(np.atleast_2d(points), dtype=float)
    n, dim = pts.shape
    if n < 2:
        raise ValueError("min_pairwise_distance needs at least two points")
    extent = np.ptp(pts, axis=0)
    if not np.any(extent > 0):
        return 0.0
    # rescale by a power of two (exact) so squared distances neither underflow nor overflow
    scale = 2.0 ** -math.floor(math.log2(extent.max()))
    if scale != 1.0:
        return min_pairwise_distance(pts * scale) / scale
    extent = np.where(extent > 0, extent, extent.max())
    # geometric mean in log space: the plain product underflows for tiny extents
    h = float(np.exp(np.mean(np.log(extent)) - math.log(n) / dim))
    while True:
        try:
            found = closest_below(pts, h)
        except OverflowError:
            # extreme aspect ratio: coarser cells keep the keys in 64 bits
            h *= 256
            continue
        if found < h:
            return found
        h *= 2


# ---------------------------------------------------------------- closure of L1 - L2

@dataclass(frozen=True)
class ClosureResult:
    kind: str              # "obstruction" or "dense"
    verified: bool
    direction: tuple | None = None   # lines of the closure run along this direction
    normal: tuple | None = None
    gap: float | None = None         # spacing of those lines


def rational_approximation(x: float, max_den: int = 10 ** 4, depth: int = 40,
                           tol: float = 1e-12) -> Fraction | None:
    """A convergent p/q of x with q <= max_den matching x to within tol, or None.

    Convergents of an irrational miss by about 1/q^2, so max_den^2 * tol must stay well
    below 1 for irrationals to be rejected."""
    scale = max(1.0, abs(x))
    h0, h1 = 0, 1
    k0, k1 = 1, 0
    rest = x
    for _ in range(depth):
        a = math.floor(rest)
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        if k1 > max_den:
            return None
        if abs(x - h1 / k1) <= tol * scale:
            return Fraction(h1, k1)
        frac = rest - a
        if frac == 0:
            return None
        rest = 1.0 / frac
    return None


def union_closure_obstruction(first: Lattice, second: Lattice, search: int = 2) -> ClosureResult:
    if first.dim != 2 or second.dim != 2:
        raise SpecError("closure obstruction search is implemented for d = 2 only")
    gens = np.hstack([first.basis, second.basis]).T
    seen = set()
    cands = []
    for coeffs in itertools.product(range(-search, search + 1), repeat=4):
        v = np.asarray(coeffs, float) @ gens
        norm = np.linalg.norm(v)
        if norm < 1e-12:
            continue
        u = v / norm
        if u[0] < 0 or (u[0] == 0 and u[1] < 0):
            u = -u
        key = (round(u[0], 10), round(u[1], 10))
        if key in seen:
            continue
        seen.add(key)
        cands.append((norm, u))
    cands.sort(key=lambda t: t[0])
    for _, u in cands:
        normal = np.array([-u[1], u[0]])
        proj = gens @ normal
        big = proj[np.argmax(np.abs(proj))]
        ratios = []
        for p in proj:
            if abs(p) <= 1e-12 * abs(big):
                continue
            r = rational_approximation(p / big)
            if r is None:
                break
            ratios.append(r)
        else:
            den = math.lcm(*(r.denominator for r in ratios))
            num = math.gcd(*(r.numerator * (den // r.denominator) for r in ratios))
            gap = abs(big) * num / den
            return ClosureResult("obstruction", True, tuple(u.tolist()), tuple(normal.tolist()), gap)
    return ClosureResult("dense", False)


# ---------------------------------------------------------------- json

def spec_to_json(spec: ForestSpec) -> dict:
    if isinstance(spec, UnionOfGrids):
        return {"kind": "union_of_grids", "grids": [grid_to_json(g) for g in spec.grids]}
    if isinstance(spec, CutProjectSpec):
        return {"kind": "cut_project", "N": spec.N, "n": spec.n,
                "phys_basis": spec.phys_basis.tolist(), "int_basis": spec.int_basis.tolist(),
                "lattice_shift": spec.lattice_shift.tolist(),
                "window_lo": spec.window_lo.tolist(), "window_hi": spec.window_hi.tolist()}
    if isinstance(spec, ToralVisitSpec):
        return {"kind": "toral_visit", "section": section_to_json(spec.section),
                "plane": spec.plane.tolist(), "base_point": spec.base_point.tolist()}
    if isinstance(spec, TbgSpec):
        return {"kind": "tbg", "k": spec.k, "angles": list(spec.angles),
                "shifts": [list(map(float, s)) for s in spec.shifts]}
    raise SpecError(f"unknown spec type {type(spec).__name__}")


def section_to_json(section: Section) -> list:
    return [[a.tolist(), b.tolist()] for a, b in section.segments]


def section_from_json(obj) -> Section:
    if isinstance(obj, dict):
        obj = obj.get("segments")
    if not isinstance(obj, list) or not obj:
        raise SpecError("section must be a non-empty list of [a, b] segments")
    try:
        return Section(tuple((seg[0], seg[1]) for seg in obj))
    except (TypeError, IndexError, ValueError) as exc:
        raise SpecError(f"malformed section: {exc}") from exc


BUILTINS = {"peres": peres_forest, "three_lattice": three_lattice_forest, "golden": golden_cut_project}


def spec_from_json(obj: dict) -> ForestSpec:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise SpecError("forest spec must be a JSON object with a 'kind' field")
    kind = obj["kind"]
    try:
        if kind == "union_of_grids":
            return union_of_grids([grid_from_json(g) for g in obj["grids"]])
        if kind == "builtin":
            name = obj["name"]
            if name not in BUILTINS:
                raise SpecError(f"unknown builtin forest {name!r}")
            return BUILTINS[name]()
        if kind == "generalized":
            return generalized_forest(obj["theta"])
        if kind == "cut_project":
            spec = CutProjectSpec(obj["phys_basis"], obj["int_basis"], obj.get("lattice_shift"),
                                  obj["window_lo"], obj["window_hi"])
            if "N" in obj and int(obj["N"]) != spec.N or "n" in obj and int(obj["n"]) != spec.n:
                raise SpecError("N or n disagrees with the basis shapes")
            return spec
        if kind == "toral_visit":
            return ToralVisitSpec(section_from_json(obj["section"]), obj["plane"], obj["base_point"])
        if kind == "tbg":
            k = int(obj["k"])
            shifts = tuple(tuple(map(float, s)) for s in obj.get("shifts", [[0.0, 0.0]] * k))
            return TbgSpec(k, tuple(map(float, obj["angles"])), shifts)
    except SpecError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecError(f"malformed {kind} spec: {exc}") from exc
    raise SpecError(f"unknown forest kind {kind!r}")


def load_spec(path) -> ForestSpec:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SpecError(f"spec file is not valid JSON: {exc}") from exc
    return spec_from_json(obj)
