"""Longest epsilon-avoiding segments in a window, and empty-slab certificates for model sets."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _sweep
from .errors import CertificateError, SpecError
from .forest import (PHI, CutProjectSpec, PointCloud, TbgSpec, UnionOfGrids, expand_tbg, generate)
from .lattice import Grid, Window, enumerate_points, lll_reduce

DEFAULT_LINE_BUDGET = 200_000
DEFAULT_REFINE = 4
SLAB_SHRINK = 1e-9
WITNESS_TOL = 1e-9
SQRT2 = math.sqrt(2)


# ---------------------------------------------------------------- queries and results

@dataclass(frozen=True)
class SegmentQuery:
    """Line-scan resolution for one epsilon.

    Directions are pi*k/direction_count; parallel lines sit at perpendicular offsets that are
    multiples of offset_step. When the full line set exceeds line_budget, every direction keeps
    a stratified subset of its offsets and the ``refine`` most promising directions are then
    rescanned more densely."""

    epsilon: float
    window: Window
    direction_count: int | None = None
    offset_step: float | None = None
    line_budget: int = DEFAULT_LINE_BUDGET
    refine: int = DEFAULT_REFINE

    def __post_init__(self):
        if not self.epsilon > 0:
            raise SpecError("epsilon must be positive")
        if self.window.dim != 2:
            raise SpecError("the line scan works in the plane only")
        step = self.epsilon / 2 if self.offset_step is None else float(self.offset_step)
        if not step > 0 or step > self.epsilon / 2 * (1 + 1e-12):
            raise SpecError(f"resolution too coarse: offset_step {step} > epsilon/2")
        need = minimum_directions(self.window.radius, self.epsilon)
        count = need if self.direction_count is None else int(self.direction_count)
        if count < need:
            raise SpecError(f"direction_count {count} < pi*R/eps = {need}")
        object.__setattr__(self, "offset_step", step)
        object.__setattr__(self, "direction_count", count)

    @property
    def epsilon_prime(self) -> float:
        return self.epsilon - self.offset_step / 2


def minimum_directions(radius: float, epsilon: float) -> int:
    return max(1, int(math.ceil(math.pi * radius / epsilon - 1e-9)))


@dataclass(frozen=True)
class SegmentResult:
    epsilon: float
    epsilon_prime: float
    length: float
    segment: tuple | None
    angle: float
    offset: float
    spanning: bool
    clearance: float
    verified: bool
    lines_scanned: int
    lines_total: int

    def __iter__(self):
        yield self.length
        yield self.segment

    @property
    def coverage(self) -> float:
        return self.lines_scanned / self.lines_total if self.lines_total else 1.0

    def to_json(self) -> dict:
        return {"epsilon": self.epsilon, "epsilon_prime": self.epsilon_prime, "max_empty_length": self.length,
                "segment": None if self.segment is None else [list(p) for p in self.segment],
                "angle": self.angle, "offset": self.offset, "spanning": self.spanning,
                "clearance": self.clearance, "verified": self.verified,
                "lines_scanned": self.lines_scanned, "lines_total": self.lines_total}


@dataclass(frozen=True)
class VisibilityReport:
    records: tuple
    slope: float
    intercept: float
    not_a_forest: bool
    monotone: bool
    window_radius: float
    direction_count: int
    offset_step: float
    notes: tuple = field(default_factory=tuple)

    @property
    def lengths(self) -> list:
        return [r.length for r in self.records]

    def to_json(self) -> dict:
        return {"records": [r.to_json() for r in self.records],
                "slope": None if math.isnan(self.slope) else self.slope,
                "intercept": None if math.isnan(self.intercept) else self.intercept,
                "not_a_forest": self.not_a_forest, "monotone": self.monotone,
                "window_radius": self.window_radius, "direction_count": self.direction_count,
                "offset_step": self.offset_step, "notes": list(self.notes)}


# ---------------------------------------------------------------- point sources

class _GridSource:
    """Union of planar grids; lines pick up their points from the strip structure."""

    def __init__(self, grids, center: np.ndarray):
        self.grids = list(grids)
        self.bases = np.array([lll_reduce(g.basis, 0.99)[0] for g in self.grids])
        self.shifts = np.array([g.shift - center for g in self.grids])
        self.center = center

    def scan(self, dir_index, offsets, cos, sin, R, eps_p):
        return _sweep.union_scan(dir_index, offsets, cos, sin, self.bases, self.shifts, R, eps_p)

    def clearance(self, p0: np.ndarray, p1: np.ndarray, eps: float) -> float:
        length = float(np.linalg.norm(p1 - p0))
        pieces = max(1, int(math.ceil(length / 64.0)))
        best = math.inf
        for i in range(pieces):
            a = p0 + (p1 - p0) * (i / pieces)
            b = p0 + (p1 - p0) * ((i + 1) / pieces)
            box = Window((a + b) / 2, float(np.abs(b - a).max()) / 2 + eps)
            for g in self.grids:
                best = min(best, _segment_distance(enumerate_points(g, box), p0, p1))
        return best


class _CloudSource:
    def __init__(self, points: np.ndarray, center: np.ndarray):
        self.points = np.ascontiguousarray(np.asarray(points, dtype=float).reshape(-1, 2))
        self.rel = np.ascontiguousarray(self.points - center)
        self.center = center

    def scan(self, dir_index, offsets, cos, sin, R, eps_p):
        order = np.argsort(dir_index, kind="stable")
        dir_sorted = dir_index[order]
        ptr = np.searchsorted(dir_sorted, np.arange(len(cos) + 1)).astype(np.int64)
        lengths, starts = _sweep.cloud_scan(self.rel, ptr, np.ascontiguousarray(offsets[order]), cos, sin,
                                            R, eps_p)
        inverse = np.empty_like(order)
        inverse[order] = np.arange(len(order))
        return lengths[inverse], starts[inverse]

    def clearance(self, p0, p1, eps):
        return _segment_distance(self.points, p0, p1)


def _segment_distance(points: np.ndarray, p0: np.ndarray, p1: np.ndarray) -> float:
    if len(points) == 0:
        return math.inf
    d = p1 - p0
    dd = float(d @ d)
    t = np.clip((points - p0) @ d / dd, 0.0, 1.0) if dd > 0 else np.zeros(len(points))
    return float(np.linalg.norm(points - p0 - t[:, None] * d, axis=1).min())


def _source(P, window: Window):
    if isinstance(P, TbgSpec):
        P = expand_tbg(P)
    if isinstance(P, UnionOfGrids):
        if P.dim != 2:
            raise SpecError("the line scan works in the plane only")
        return _GridSource(P.grids, window.center)
    if isinstance(P, Grid):
        return _GridSource([P], window.center)
    pts = P.points if isinstance(P, PointCloud) else np.asarray(P, dtype=float)
    pts = pts.reshape(-1, pts.shape[-1]) if pts.size else np.empty((0, 2))
    if pts.shape[1] != 2:
        raise SpecError("the line scan works in the plane only")
    return _CloudSource(pts, window.center)


# ---------------------------------------------------------------- line planning

def _half_extent(D: int, R: float) -> np.ndarray:
    theta = np.pi * np.arange(D) / D
    return R * (np.abs(np.sin(theta)) + np.abs(np.cos(theta)))


def _stratified(dirs: np.ndarray, J: np.ndarray, stride: int) -> tuple[np.ndarray, np.ndarray]:
    """One offset index per stratum of ``stride`` consecutive offsets, at a Kronecker position."""
    per = (2 * J + 1 + stride - 1) // stride
    dir_index = np.repeat(dirs, per)
    start = np.repeat(np.cumsum(per) - per, per)
    m = np.arange(len(dir_index)) - start
    phase = np.mod(dir_index * PHI + m * SQRT2, 1.0)
    j = -np.repeat(J, per) + m * stride + np.floor(phase * stride).astype(np.int64)
    keep = j <= np.repeat(J, per)
    return dir_index[keep], j[keep]


def _plan(D: int, R: float, h: float, budget: int):
    J = np.floor(_half_extent(D, R) / h + 1e-9).astype(np.int64)
    total = int((2 * J + 1).sum())
    stride = max(1, int(math.ceil(total / budget)))
    dirs, j = _stratified(np.arange(D), J, stride)
    return dirs, j, J, total


def _refine_plan(best_dirs: np.ndarray, J: np.ndarray, D: int, budget: int):
    dirs = np.unique(np.concatenate([(best_dirs + s) % D for s in (-1, 0, 1)]))
    total = int((2 * J[dirs] + 1).sum())
    stride = max(1, int(math.ceil(total / max(budget, 1))))
    return _stratified(dirs, J[dirs], stride)


def _scan(source, window: Window, epsilons, h: float, D: int, budget: int, refine: int) -> list:
    eps = np.asarray(epsilons, dtype=float)
    eps_p = eps - h / 2
    if np.any(eps_p <= 0):
        raise SpecError("offset_step must be below 2*epsilon")
    R = window.radius
    theta = np.pi * np.arange(D) / D
    cos, sin = np.cos(theta), np.sin(theta)
    dirs, j, J, total = _plan(D, R, h, budget)
    lengths, starts = source.scan(dirs, j * h, cos, sin, R, eps_p)
    done = len(dirs)
    if done < total and refine > 0:
        per_dir = np.zeros((D, len(eps)))
        np.maximum.at(per_dir, dirs, lengths)
        best = np.unique(np.argsort(-per_dir, axis=0)[:refine].ravel())
        d2, j2 = _refine_plan(best, J, D, budget)
        l2, s2 = source.scan(d2, j2 * h, cos, sin, R, eps_p)
        dirs, j = np.concatenate([dirs, d2]), np.concatenate([j, j2])
        lengths, starts = np.vstack([lengths, l2]), np.vstack([starts, s2])
        done += len(d2)
    done = min(done, total)
    out = []
    for e in range(len(eps)):
        row = int(np.argmax(lengths[:, e]))
        length = float(lengths[row, e])
        k, o = int(dirs[row]), float(j[row] * h)
        e_dir = np.array([cos[k], sin[k]])
        n_dir = np.array([-sin[k], cos[k]])
        if length <= 0:
            out.append(SegmentResult(float(eps[e]), float(eps_p[e]), 0.0, None, float(theta[k]), o,
                                     False, 0.0, True, done, total))
            continue
        a0 = float(starts[row, e])
        p0 = window.center + o * n_dir + a0 * e_dir
        p1 = p0 + length * e_dir
        lo, hi = _sweep.chord(cos[k], sin[k], o, R)
        spanning = bool(length >= (hi - lo) - 1e-9 and hi - lo >= R)
        clear = source.clearance(p0, p1, float(eps_p[e]))
        out.append(SegmentResult(float(eps[e]), float(eps_p[e]), length, (tuple(p0.tolist()), tuple(p1.tolist())),
                                 float(theta[k]), o, spanning, clear, bool(clear >= eps_p[e] - WITNESS_TOL),
                                 done, total))
    return out


def _diagonal(window: Window, eps: float, eps_p: float) -> SegmentResult:
    R = window.radius
    p0 = window.center - R
    p1 = window.center + R
    return SegmentResult(eps, eps_p, 2 * SQRT2 * R, (tuple(p0.tolist()), tuple(p1.tolist())), math.pi / 4, 0.0,
                         True, math.inf, True, 0, 0)


def max_empty_segment(P, query: SegmentQuery) -> SegmentResult:
    """Longest scanned segment in the window keeping distance >= eps' = eps - offset_step/2
    from every point of P; unpacks as (length, segment)."""
    source = _source(P, query.window)
    if isinstance(source, _CloudSource) and len(source.points) == 0:
        return _diagonal(query.window, query.epsilon, query.epsilon_prime)
    return _scan(source, query.window, [query.epsilon], query.offset_step, query.direction_count,
                 query.line_budget, query.refine)[0]


def fit_slope(epsilons, lengths) -> tuple[float, float]:
    """Least-squares slope and intercept of log(length) against log(1/eps)."""
    eps = np.asarray(epsilons, dtype=float)
    lengths = np.asarray(lengths, dtype=float)
    if len(eps) < 2 or np.any(lengths <= 0):
        return math.nan, math.nan
    slope, intercept = np.polyfit(np.log(1 / eps), np.log(lengths), 1)
    return float(slope), float(intercept)


def visibility_curve(spec, epsilons, window: Window, direction_count: int | None = None,
                     offset_step: float | None = None, line_budget: int = DEFAULT_LINE_BUDGET,
                     refine: int = DEFAULT_REFINE) -> VisibilityReport:
    """One shared line set, resolved for the smallest epsilon, scanned at every epsilon."""
    eps = [float(e) for e in epsilons]
    if len(eps) < 2:
        raise SpecError("visibility_curve needs at least two epsilon values")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise SpecError("epsilons must be strictly decreasing")
    if not all(0 < e < 0.5 for e in eps):
        raise SpecError("epsilon values must lie in (0, 1/2)")
    query = SegmentQuery(eps[-1], window, direction_count, offset_step, line_budget, refine)
    h, D = query.offset_step, query.direction_count
    if isinstance(spec, (UnionOfGrids, TbgSpec, Grid)):
        source = _source(spec, window)
    else:
        margin = max(eps)
        cloud = spec if isinstance(spec, (PointCloud, np.ndarray)) else generate(spec, window.enlarged(margin))
        source = _source(cloud, window)
    notes = []
    if isinstance(source, _CloudSource) and len(source.points) == 0:
        records = [_diagonal(window, e, e - h / 2) for e in eps]
    else:
        records = _scan(source, window, eps, h, D, line_budget, refine)
    if records and records[0].lines_scanned < records[0].lines_total:
        notes.append(f"scanned {records[0].lines_scanned} of {records[0].lines_total} lines")
    slope, intercept = fit_slope(eps, [r.length for r in records])
    monotone = all(a.length <= b.length + 1e-9 for a, b in zip(records, records[1:]))
    not_forest = all(r.spanning for r in records)
    if not_forest:
        notes.append("not a forest: every epsilon admits a window-spanning empty line")
    return VisibilityReport(tuple(records), slope, intercept, not_forest, monotone, window.radius, D, h,
                            tuple(notes))


# ---------------------------------------------------------------- empty slabs

@dataclass(frozen=True)
class EmptySlabCertificate:
    """Model-set points u satisfy (normal . u) mod 1 outside the gap (c0, c1), so they clear
    every hyperplane (normal . u) = mid + Z by at least epsilon."""

    q: tuple
    normal: tuple
    gap: tuple
    epsilon: float
    checked_window: Window
    image_length: float
    attempts: int

    @property
    def gap_width(self) -> float:
        return self.gap[1] - self.gap[0]

    def widened(self, factor: float) -> "EmptySlabCertificate":
        mid = (self.gap[0] + self.gap[1]) / 2
        half = self.gap_width * factor / 2
        return EmptySlabCertificate(self.q, self.normal, (mid - half, mid + half), self.epsilon * factor,
                                    self.checked_window, self.image_length, self.attempts)

    def to_json(self) -> dict:
        return {"q": list(self.q), "normal": list(self.normal), "gap": list(self.gap), "epsilon": self.epsilon,
                "window": {"center": self.checked_window.center.tolist(), "radius": self.checked_window.radius},
                "image_length": self.image_length, "attempts": self.attempts}


def _circumradius(spec: CutProjectSpec) -> float:
    half = (spec.window_hi - spec.window_lo) / 2
    k = len(half)
    signs = np.array(np.meshgrid(*([[-1.0, 1.0]] * k), indexing="ij")).reshape(k, -1)
    return float(np.linalg.norm(spec.int_basis @ (signs * half[:, None]), axis=0).max())


def _image(spec: CutProjectSpec, q: np.ndarray) -> tuple[float, float]:
    """Centre and length of {q.s - (I^T q).w : w in window} on the circle."""
    iq = spec.int_basis.T @ q
    centre = float(q @ spec.lattice_shift - iq @ (spec.window_lo + spec.window_hi) / 2)
    return centre % 1.0, float(np.abs(iq) @ (spec.window_hi - spec.window_lo))


def _cylinder_candidates(line: np.ndarray, delta: float, max_norm: float):
    """Integer vectors within delta of the line R*line, nonnegative along its main axis,
    yielded in batches of nondecreasing Euclidean norm."""
    big_n = len(line)
    axis = int(np.argmax(np.abs(line)))
    others = [i for i in range(big_n) if i != axis]
    reach = delta * (1 + math.sqrt(big_n))
    k = int(math.ceil(reach))
    if (2 * k + 1) ** (big_n - 1) > 20_000:
        # wide cylinder: walk sup-norm shells instead
        pending = []
        for r in range(1, int(max_norm) + 1):
            axes = [np.arange(-r, r + 1)] * big_n
            shell = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, big_n)
            shell = shell[np.abs(shell).max(axis=1) == r]
            pending.extend(shell.tolist())
            arr = np.array(pending, dtype=float)
            norms = np.linalg.norm(arr, axis=1)
            ready = norms <= r
            yield from _ordered(arr[ready], norms[ready])
            pending = arr[~ready].tolist()
        return
    offs = np.array(np.meshgrid(*([np.arange(-k, k + 1)] * (big_n - 1)), indexing="ij")).reshape(big_n - 1, -1).T
    pending = np.empty((0, big_n))
    top = int(math.ceil((max_norm + delta) * abs(line[axis])))
    lead = 0
    batch = 4096
    while lead < top:
        m = np.arange(lead + 1, min(top, lead + batch) + 1, dtype=float)
        lam = m / line[axis]
        centre = lam[:, None] * line[None, :]
        cand = np.empty((len(m), len(offs), big_n))
        cand[:, :, axis] = m[:, None]
        cand[:, :, others] = np.round(centre[:, others])[:, None, :] + offs[None, :, :]
        cand = cand.reshape(-1, big_n)
        lead = int(m[-1])
        pending = np.vstack([pending, cand])
        norms = np.linalg.norm(pending, axis=1)
        safe = lead / abs(line[axis]) - delta
        ready = norms <= safe
        yield from _ordered(pending[ready], norms[ready])
        pending = pending[~ready]
    if len(pending):
        yield from _ordered(pending, np.linalg.norm(pending, axis=1))


def _ordered(cands: np.ndarray, norms: np.ndarray):
    order = np.lexsort(tuple(cands.T[::-1]) + (norms,))
    for i in order:
        yield cands[i]


def empty_slab_certificate(spec: CutProjectSpec, window: Window, max_norm: float = 10_000.0,
                           retries: int = 8, seed: int = 0) -> EmptySlabCertificate:
    """First primitive q, by increasing norm inside the delta-cylinder about a random line
    orthogonal to internal space, whose circle image of the internal window leaves a gap."""
    if window.dim != spec.n:
        raise SpecError("window dimension does not match physical space")
    big_n, k = spec.N, spec.int_basis.shape[1]
    t = _circumradius(spec)
    delta = math.inf if t == 0 else 1.0 / (2 * math.sqrt(k) * t)
    q_int, _ = np.linalg.qr(np.column_stack([spec.int_basis, np.eye(big_n)]))
    complement = q_int[:, k:big_n]
    rng = np.random.default_rng(seed)
    attempts = 0
    for _ in range(retries):
        line = complement @ rng.normal(size=big_n - k)
        line /= np.linalg.norm(line)
        for q in _cylinder_candidates(line, min(delta, 1e6), max_norm):
            off = q - (q @ line) * line
            if np.linalg.norm(off) >= delta:
                continue
            attempts += 1
            qi = np.round(q).astype(np.int64)
            if math.gcd(*qi.tolist()) != 1:
                continue
            normal = spec.phys_basis.T @ qi
            if np.linalg.norm(normal) < 1e-12:
                continue
            centre, length = _image(spec, qi.astype(float))
            if length >= 1.0:
                continue
            c0 = (centre + length / 2) % 1.0
            width = 1.0 - length
            scale = max(float(np.linalg.norm(qi)), float(np.linalg.norm(normal)))
            return EmptySlabCertificate(tuple(int(v) for v in qi), tuple(normal.tolist()), (c0, c0 + width),
                                        width / (2 * scale), window, length, attempts)
    raise CertificateError(f"certificate search exhausted: no q with |q| <= {max_norm} after {retries} lines")


def slab_coordinates(cert: EmptySlabCertificate, P) -> np.ndarray:
    pts = P.points if isinstance(P, PointCloud) else np.asarray(P, dtype=float)
    pts = np.atleast_2d(pts) if pts.size else np.empty((0, len(cert.normal)))
    if pts.shape[1] != len(cert.normal):
        raise SpecError(f"points have dimension {pts.shape[1]}, certificate expects {len(cert.normal)}")
    return np.mod(pts @ np.asarray(cert.normal), 1.0)


def verify_slab(cert: EmptySlabCertificate, P) -> bool:
    """True iff no point has its coset coordinate inside the gap shrunk by 1e-9."""
    t = slab_coordinates(cert, P)
    rel = np.mod(t - cert.gap[0], 1.0)
    width = cert.gap_width
    if width >= 1.0:
        return len(t) == 0
    inside = (rel > SLAB_SHRINK) & (rel < width - SLAB_SHRINK)
    return not bool(inside.any())
