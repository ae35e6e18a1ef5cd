"""Lattices, grids, windows and the basic geometry of numbers we need.

A lattice is stored by a square basis matrix whose columns generate it.
A grid is a translate ``shift + lattice``.
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from ._cvp import closest_distances
from .errors import BudgetExceededError, DegenerateLatticeError, SpecError

MAX_MINIMA_DIM = 6
MAX_BANASZCZYK_DIM = 4
DEFAULT_POINT_BUDGET = 60_000_000
MINIMA_SAFETY = 1.5


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Lattice:
    basis: np.ndarray

    def __post_init__(self):
        b = np.atleast_2d(np.asarray(self.basis, dtype=float))
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise SpecError(f"lattice basis must be square, got shape {b.shape}")
        if not np.all(np.isfinite(b)):
            raise SpecError("lattice basis has non-finite entries")
        object.__setattr__(self, "basis", _frozen(b))

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @classmethod
    def integer(cls, dim: int) -> "Lattice":
        return cls(np.eye(dim))

    def __repr__(self):
        return f"Lattice(dim={self.dim}, basis={self.basis.tolist()})"


@dataclass(frozen=True, eq=False)
class Grid:
    lattice: Lattice
    shift: np.ndarray = None

    def __post_init__(self):
        s = np.zeros(self.lattice.dim) if self.shift is None else np.asarray(self.shift, dtype=float)
        if s.shape != (self.lattice.dim,):
            raise SpecError(f"shift has shape {s.shape}, lattice has dim {self.lattice.dim}")
        object.__setattr__(self, "shift", _frozen(s))

    @property
    def dim(self) -> int:
        return self.lattice.dim

    @property
    def basis(self) -> np.ndarray:
        return self.lattice.basis

    def __repr__(self):
        return f"Grid(basis={self.basis.tolist()}, shift={self.shift.tolist()})"


@dataclass(frozen=True, eq=False)
class Window:
    """Closed sup-norm box ``|x - center|_inf <= radius``."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _frozen(np.atleast_1d(self.center)))
        if not self.radius >= 0:
            raise SpecError(f"window radius must be >= 0, got {self.radius}")
        object.__setattr__(self, "radius", float(self.radius))

    @classmethod
    def centered(cls, dim: int, radius: float) -> "Window":
        return cls(np.zeros(dim), radius)

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def contains(self, points: np.ndarray, tol: float = 0.0) -> np.ndarray:
        pts = np.atleast_2d(points)
        return np.all(np.abs(pts - self.center) <= self.radius + tol, axis=1)

    def enlarged(self, margin: float) -> "Window":
        return Window(self.center, self.radius + margin)


@dataclass(frozen=True)
class MinimaReport:
    lambdas: tuple
    norm: str
    covering_lo: float
    covering_hi: float


@dataclass(frozen=True)
class BanaszczykReport:
    covering_estimate: float
    dual_lambda1: float
    product: float
    bound: float
    ok: bool


def _invertible(basis: np.ndarray) -> np.ndarray:
    det = np.linalg.det(basis)
    scale = np.prod(np.linalg.norm(basis, axis=0))
    if scale == 0 or abs(det) <= 1e-12 * scale:
        raise DegenerateLatticeError("degenerate lattice: basis is singular")
    return np.linalg.inv(basis)


def dual(lat: Lattice) -> Lattice:
    return Lattice(_invertible(lat.basis).T)


def covolume(lat: Lattice) -> float:
    return abs(float(np.linalg.det(lat.basis)))


def gram_schmidt(basis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return (orthogonalised columns, mu coefficients)."""
    d = basis.shape[1]
    star = np.array(basis, dtype=float)
    mu = np.eye(d)
    for i in range(d):
        for j in range(i):
            denom = star[:, j] @ star[:, j]
            mu[i, j] = (basis[:, i] @ star[:, j]) / denom
            star[:, i] -= mu[i, j] * star[:, j]
    return star, mu


def lll_reduce(basis: np.ndarray, delta: float = 0.75) -> tuple[np.ndarray, np.ndarray]:
    """Textbook LLL on the columns. Returns (reduced basis, unimodular U) with reduced = basis @ U."""
    arr = np.ascontiguousarray(basis, dtype=float)
    b, u = _lll_cached(arr.tobytes(), arr.shape[0], delta)
    return b.copy(), u.copy()


@functools.lru_cache(maxsize=4096)
def _lll_cached(raw: bytes, d: int, delta: float) -> tuple[np.ndarray, np.ndarray]:
    b = np.frombuffer(raw, dtype=float).reshape(d, d).copy()
    d = b.shape[1]
    unimod = np.eye(d, dtype=np.int64)
    _invertible(b)
    k = 1
    star, mu = gram_schmidt(b)
    guard = 0
    while k < d:
        guard += 1
        if guard > 100_000:
            break
        for j in range(k - 1, -1, -1):
            q = round(mu[k, j])
            if q:
                b[:, k] -= q * b[:, j]
                unimod[:, k] -= q * unimod[:, j]
                star, mu = gram_schmidt(b)
        lhs = star[:, k] @ star[:, k]
        rhs = (delta - mu[k, k - 1] ** 2) * (star[:, k - 1] @ star[:, k - 1])
        if lhs >= rhs:
            k += 1
        else:
            b[:, [k - 1, k]] = b[:, [k, k - 1]]
            unimod[:, [k - 1, k]] = unimod[:, [k, k - 1]]
            star, mu = gram_schmidt(b)
            k = max(k - 1, 1)
    return b, unimod


def _norms(vectors: np.ndarray, norm: str) -> np.ndarray:
    if norm == "euclidean":
        return np.linalg.norm(vectors, axis=-1)
    if norm == "sup":
        return np.max(np.abs(vectors), axis=-1)
    raise ValueError(f"unknown norm {norm!r}")


def _coefficient_box(bounds: Sequence[tuple[int, int]]) -> np.ndarray:
    axes = [np.arange(lo, hi + 1) for lo, hi in bounds]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def short_vectors(lat: Lattice, radius: float, norm: str = "euclidean",
                  budget: int = 20_000_000) -> tuple[np.ndarray, np.ndarray]:
    """All nonzero lattice vectors of norm <= radius, as (vectors, coefficients in the given basis)."""
    reduced, unimod = lll_reduce(lat.basis)
    inv = _invertible(reduced)
    dual_norm = np.linalg.norm(inv, axis=1) if norm == "euclidean" else np.abs(inv).sum(axis=1)
    half = np.ceil(MINIMA_SAFETY * radius * dual_norm + 1e-9).astype(int)
    count = float(np.prod(2.0 * half + 1))
    if count > budget:
        raise BudgetExceededError(
            f"short vector enumeration needs about {count:.3g} candidates", estimate=count)
    coeffs = _coefficient_box([(-h, h) for h in half])
    vecs = coeffs @ reduced.T
    lengths = _norms(vecs, norm)
    keep = (lengths <= radius * (1 + 1e-12) + 1e-15) & np.any(coeffs != 0, axis=1)
    return vecs[keep], coeffs[keep] @ unimod.T


def successive_minima(lat: Lattice, norm: str = "euclidean") -> MinimaReport:
    d = lat.dim
    if d > MAX_MINIMA_DIM:
        raise BudgetExceededError(f"enumeration limit exceeded: dimension {d} > {MAX_MINIMA_DIM}")
    reduced, _ = lll_reduce(lat.basis)
    # the reduced columns are independent, so lambda_d is at most the longest of them
    radius = float(_norms(reduced.T, norm).max())
    vecs, coeffs = short_vectors(lat, radius, norm)
    lengths = _norms(vecs, norm)
    order = np.lexsort((np.arange(len(lengths)), lengths))
    lambdas: list[float] = []
    chosen: list[np.ndarray] = []
    for idx in order:
        cand = coeffs[idx].astype(float)
        trial = np.array(chosen + [cand])
        if np.linalg.matrix_rank(trial, tol=1e-9) == len(chosen) + 1:
            chosen.append(cand)
            lambdas.append(float(lengths[idx]))
            if len(chosen) == d:
                break
    if len(lambdas) < d:
        raise BudgetExceededError("enumeration did not reach full rank")
    lam_d = lambdas[-1]
    return MinimaReport(tuple(lambdas), norm, lam_d / 2, d * lam_d / 2)


def covering_upper_bound(lat: Lattice) -> float:
    """Half the Gram-Schmidt diagonal of an LLL basis bounds the covering radius from above."""
    reduced, _ = lll_reduce(lat.basis)
    star, _ = gram_schmidt(reduced)
    return 0.5 * math.sqrt(float(np.sum(star * star)))


def nearest_distances(lat: Lattice, targets: np.ndarray) -> np.ndarray:
    """Euclidean distance from each target to the nearest lattice point (exact enumeration)."""
    reduced, _ = lll_reduce(lat.basis)
    q, r = np.linalg.qr(reduced)
    ys = np.ascontiguousarray(np.atleast_2d(targets) @ q)
    bound = covering_upper_bound(lat)
    return closest_distances(np.ascontiguousarray(r), ys, (bound * (1 + 1e-9)) ** 2 + 1e-300)


def covering_lower_bound(lat: Lattice, samples: int = 256, seed: int = 0) -> float:
    """Sampled lower estimate of the covering radius: the farthest sampled point from the lattice."""
    d = lat.dim
    rng = np.random.default_rng(seed)
    halves = np.array(list(itertools.product((0.0, 0.5), repeat=d)))[1:]
    reduced, _ = lll_reduce(lat.basis)
    unit = np.vstack([halves, rng.random((samples, d))])
    targets = unit @ reduced.T
    return float(nearest_distances(lat, targets).max())


def banaszczyk_check(lat: Lattice, samples: int = 256, seed: int = 0) -> BanaszczykReport:
    d = lat.dim
    if d > MAX_BANASZCZYK_DIM:
        raise BudgetExceededError(f"enumeration limit exceeded: dimension {d} > {MAX_BANASZCZYK_DIM}")
    mu_hat = covering_lower_bound(lat, samples, seed)
    lam1 = successive_minima(dual(lat)).lambdas[0]
    product = mu_hat * lam1
    bound = d / 2
    return BanaszczykReport(mu_hat, lam1, product, bound, product <= bound + 1e-9)


def coefficient_ranges(grid: Grid, window: Window) -> list[tuple[int, int]]:
    """Box of coefficients, in the grid's LLL-reduced basis, covering the window."""
    inv = _invertible(lll_reduce(grid.basis)[0])
    centre = inv @ (window.center - grid.shift)
    spread = window.radius * np.abs(inv).sum(axis=1)
    lo = np.floor(centre - spread - 1e-9).astype(int)
    hi = np.ceil(centre + spread + 1e-9).astype(int)
    return list(zip(lo.tolist(), hi.tolist()))


def estimate_point_count(grid: Grid, window: Window) -> float:
    return float(np.prod([hi - lo + 1 for lo, hi in coefficient_ranges(grid, window)]))


def enumerate_points(grid: Grid, window: Window, budget: int = DEFAULT_POINT_BUDGET) -> np.ndarray:
    """Points of the grid inside the closed window, as an (m, d) array."""
    if window.dim != grid.dim:
        raise SpecError("window and grid dimensions differ")
    ranges = coefficient_ranges(grid, window)
    count = float(np.prod([hi - lo + 1 for lo, hi in ranges]))
    if count > budget:
        raise BudgetExceededError(
            f"enumeration would visit about {count:.3g} candidates (budget {budget})", estimate=count)
    tol = 1e-12 * max(1.0, window.radius)
    reduced, _ = lll_reduce(grid.basis)
    chunks = []
    lo0, hi0 = ranges[0]
    per_slice = max(1.0, count / (hi0 - lo0 + 1))
    step = max(1, int(4_000_000 // per_slice))
    for a in range(lo0, hi0 + 1, step):
        sub = [(a, min(a + step - 1, hi0))] + ranges[1:]
        coeffs = _coefficient_box(sub)
        pts = coeffs @ reduced.T + grid.shift
        chunks.append(pts[window.contains(pts, tol)])
    if not chunks:
        return np.empty((0, grid.dim))
    return np.concatenate(chunks)


def same_grid(a: Grid, b: Grid, tol: float = 1e-9) -> bool:
    """True when the two grids are the same set of points."""
    if a.dim != b.dim:
        return False
    inv = _invertible(a.basis)
    change = inv @ b.basis
    if np.max(np.abs(change - np.round(change))) > tol:
        return False
    if abs(abs(round(float(np.linalg.det(np.round(change))))) - 1) > 0:
        return False
    offset = inv @ (b.shift - a.shift)
    return bool(np.max(np.abs(offset - np.round(offset))) <= tol)


def grid_to_json(grid: Grid) -> dict:
    return {"dim": grid.dim, "basis": grid.basis.tolist(), "shift": grid.shift.tolist()}


def grid_from_json(obj: dict) -> Grid:
    try:
        basis = np.array(obj["basis"], dtype=float)
        shift = np.array(obj.get("shift", [0.0] * basis.shape[0]), dtype=float)
        dim = int(obj.get("dim", basis.shape[0]))
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecError(f"malformed grid: {exc}") from exc
    if basis.shape != (dim, dim):
        raise SpecError(f"basis shape {basis.shape} does not match dim {dim}")
    return Grid(Lattice(basis), shift)


def write_points_csv(points: np.ndarray, path) -> None:
    pts = np.atleast_2d(points)
    dim = pts.shape[1] if pts.size else 0
    with open(path, "w", newline="") as fh:
        fh.write(",".join(f"x{i}" for i in range(dim)) + "\n")
        for row in pts:
            fh.write(",".join(format(float(v), ".12g") for v in row) + "\n")


def read_points_csv(path) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline().strip()
        dim = len(header.split(",")) if header else 0
        rows = [list(map(float, line.split(","))) for line in fh if line.strip()]
    return np.array(rows, dtype=float).reshape(-1, dim)
