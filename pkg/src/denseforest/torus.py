"""Orbits of translations on tori, rational orbit lattices and unavoidable sections."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .errors import BudgetExceededError, CertificateError, SpecError
from .forest import Section
from .lattice import Lattice

CIRCLE_TOL = 1e-9
BOUND_TOL = 1e-12


def circle_norm(x):
    """Distance to the nearest integer, elementwise."""
    x = np.asarray(x, dtype=float)
    return np.abs(x - np.round(x))


def torus_norm(x) -> np.ndarray:
    """Sup-norm distance to the nearest integer vector, over the last axis."""
    return circle_norm(x).max(axis=-1)


@dataclass(frozen=True)
class OrbitQuery:
    d: int
    xi: tuple
    M: int
    epsilon: float

    def __post_init__(self):
        xi = tuple(float(v) for v in np.atleast_1d(self.xi))
        if len(xi) != self.d:
            raise SpecError(f"xi has {len(xi)} coordinates, expected {self.d}")
        if self.M < 0 or not self.epsilon > 0:
            raise SpecError("need M >= 0 and epsilon > 0")
        object.__setattr__(self, "xi", xi)


def orbit_points(xi, M: int) -> np.ndarray:
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    m = np.arange(M + 1, dtype=float)[:, None]
    return np.mod(m * xi[None, :], 1.0)


def _dense_1d(points: np.ndarray, eps: float) -> bool:
    pts = np.sort(points)
    gaps = np.diff(np.append(pts, pts[0] + 1.0))
    # the farthest point of the circle from the orbit sits mid-gap
    return bool(gaps.max() / 2 < eps)


def _farthest(centres: np.ndarray, orbit: np.ndarray, chunk: int = 4096) -> np.ndarray:
    out = np.empty(len(centres))
    for s in range(0, len(centres), chunk):
        diff = centres[s:s + chunk, None, :] - orbit[None, :, :]
        out[s:s + chunk] = torus_norm(diff).min(axis=1)
    return out


def _dense_box(orbit: np.ndarray, eps: float, max_depth: int = 40) -> bool:
    # distance-to-orbit is 1-Lipschitz in the sup norm: a cell of half-side h whose centre
    # is within eps - h of the orbit is covered; a centre at distance >= eps refutes density
    d = orbit.shape[1]
    per_axis = max(1, math.ceil(4.0 / eps))
    side = 1.0 / per_axis
    ticks = (np.arange(per_axis) + 0.5) * side
    centres = np.stack(np.meshgrid(*([ticks] * d), indexing="ij"), axis=-1).reshape(-1, d)
    children = np.array(list(itertools.product((-0.25, 0.25), repeat=d)))
    for _ in range(max_depth):
        far = _farthest(centres, orbit)
        if np.any(far >= eps):
            return False
        open_cells = centres[far + side / 2 >= eps]
        if len(open_cells) == 0:
            return True
        side /= 2
        centres = (open_cells[:, None, :] + 2 * side * children[None, :, :]).reshape(-1, d)
        if len(centres) > 5_000_000:
            raise BudgetExceededError("density refinement exploded")
    return False


def is_eps_dense(query: OrbitQuery) -> bool:
    """Whether every point of T^d is within sup-distance < epsilon of {m xi : 0 <= m <= M}."""
    if query.d > 3:
        raise BudgetExceededError("is_eps_dense supports d <= 3")
    orbit = orbit_points(query.xi, query.M)
    if query.d == 1:
        return _dense_1d(orbit[:, 0], query.epsilon)
    return _dense_box(orbit, query.epsilon)


def witness_threshold(d: int, epsilon: float, M: int) -> float:
    return d ** 1.5 * epsilon ** (d - 1) / M ** (1.0 / d)


def half_space_vectors(d: int, radius: int) -> np.ndarray:
    """Integer vectors with 0 < |u|_inf <= radius and first nonzero entry positive,
    ordered by sup norm, then lexicographically."""
    if (2 * radius + 1) ** d > 50_000_000:
        raise BudgetExceededError(f"{(2 * radius + 1) ** d} candidate vectors exceed the budget")
    axes = [np.arange(-radius, radius + 1)] * d
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    nz = grid != 0
    first = np.argmax(nz, axis=1)
    lead = grid[np.arange(len(grid)), first]
    grid = grid[nz.any(axis=1) & (lead > 0)]
    sup = np.abs(grid).max(axis=1)
    return grid[np.argsort(sup, kind="stable")]


def s_witness(xi, d: int, epsilon: float, M: int):
    """First u with |u|_inf <= d/eps and <u.xi> <= d^(3/2) eps^(d-1) / M^(1/d), or None."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    radius = int(math.floor(d / epsilon + 1e-9))
    cands = half_space_vectors(d, radius)
    vals = circle_norm(cands @ xi)
    hit = np.flatnonzero(vals <= witness_threshold(d, epsilon, M) + BOUND_TOL)
    return tuple(int(v) for v in cands[hit[0]]) if len(hit) else None


@dataclass(frozen=True)
class PropReport:
    d: int
    epsilon: float
    M: int
    samples: int
    not_dense: int
    violations: tuple

    @property
    def ok(self) -> bool:
        return not self.violations


def reduction_length(d: int, epsilon: float) -> int:
    return int(math.ceil(2 ** d * epsilon ** (-d) - 1e-9))


def check_propreduc(d: int, epsilon: float, xi_samples) -> PropReport:
    """Every sampled xi whose orbit up to M = ceil(2^d eps^-d) is not eps-dense must have a witness."""
    M = reduction_length(d, epsilon)
    xs = np.atleast_2d(np.asarray(xi_samples, dtype=float))
    if xs.shape[1] != d:
        xs = xs.reshape(-1, d)
    radius = int(math.floor(d / epsilon + 1e-9))
    cands = half_space_vectors(d, radius)
    thresh = witness_threshold(d, epsilon, M) + BOUND_TOL
    violations = []
    not_dense = 0
    for xi in xs:
        if is_eps_dense(OrbitQuery(d, tuple(xi), M, epsilon)):
            continue
        not_dense += 1
        if not np.any(circle_norm(cands @ xi) <= thresh):
            violations.append(tuple(float(v) for v in xi))
    return PropReport(d, epsilon, M, len(xs), not_dense, tuple(violations))


# ---------------------------------------------------------------- rational orbits

def _row_hnf(rows: list[list[int]]) -> list[list[int]]:
    """Upper-triangular Hermite normal form of the row lattice (exact integers)."""
    a = [list(r) for r in rows]
    ncols = len(a[0])
    out = []
    for col in range(ncols):
        while True:
            live = [r for r in a if r[col] != 0]
            if len(live) <= 1:
                break
            live.sort(key=lambda r: abs(r[col]))
            pivot = live[0]
            for r in live[1:]:
                q = r[col] // pivot[col]
                for j in range(ncols):
                    r[j] -= q * pivot[j]
        live = [r for r in a if r[col] != 0]
        if not live:
            continue
        pivot = live[0]
        a.remove(pivot)
        if pivot[col] < 0:
            pivot = [-x for x in pivot]
        out.append(pivot)
    for i, row in enumerate(out):
        piv_col = next(j for j, x in enumerate(row) if x)
        for k in range(i):
            q = out[k][piv_col] // row[piv_col]
            out[k] = [x - q * y for x, y in zip(out[k], row)]
    return out


@dataclass(frozen=True)
class RationalOrbitLattices:
    p: tuple
    q: int
    basis: tuple          # exact Fraction basis of Lambda(p, q), columns
    dual_basis: tuple     # integer basis of Lambda*(p, q), columns
    index: int

    @property
    def lattice(self) -> Lattice:
        return Lattice(np.array(self.basis, dtype=float))

    @property
    def dual(self) -> Lattice:
        return Lattice(np.array(self.dual_basis, dtype=float))


def _fraction_inverse(m: list[list[Fraction]]) -> list[list[Fraction]]:
    n = len(m)
    aug = [list(r) + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(m)]
    for c in range(n):
        piv = next(r for r in range(c, n) if aug[r][c] != 0)
        aug[c], aug[piv] = aug[piv], aug[c]
        pv = aug[c][c]
        aug[c] = [x / pv for x in aug[c]]
        for r in range(n):
            if r != c and aug[r][c] != 0:
                f = aug[r][c]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[c])]
    return [r[n:] for r in aug]


def rational_orbit_lattices(p: Sequence[int], q: int) -> RationalOrbitLattices:
    """Lambda(p, q) = span(p/q, e_1..e_d) and its dual {u : p.u = 0 mod q}."""
    p = [int(v) for v in p]
    q = int(q)
    if q < 1:
        raise SpecError("q must be a positive integer")
    if math.gcd(q, *p) != 1:
        raise SpecError(f"gcd(p, q) = {math.gcd(q, *p)} != 1")
    d = len(p)
    gens = [p] + [[q * int(i == j) for j in range(d)] for i in range(d)]
    hnf = _row_hnf(gens)
    if len(hnf) != d:
        raise SpecError("generators do not span R^d")
    # columns of the basis are the HNF rows divided by q
    basis = [[Fraction(hnf[j][i], q) for j in range(d)] for i in range(d)]
    det = Fraction(1)
    for i in range(d):
        det *= Fraction(hnf[i][i], q)
    index = 1 / det
    if index.denominator != 1 or index != q:
        raise AssertionError(f"index {index} of Z^d in Lambda(p, q) should be {q}")
    inv = _fraction_inverse(basis)
    dual = [[inv[j][i] for j in range(d)] for i in range(d)]
    if any(x.denominator != 1 for row in dual for x in row):
        raise AssertionError("dual basis is not integral")
    dual_int = tuple(tuple(int(x) for x in row) for row in dual)
    return RationalOrbitLattices(tuple(p), q, tuple(tuple(r) for r in basis), dual_int, int(index))


def mahler_transfer(xi, q: int, C: float, U: float) -> tuple:
    """Given <q xi> <= C with |q| <= U, find v with |v|_inf <= d U^(1/d), <xi.v> <= d U^(-(d-1)/d) C."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    d = len(xi)
    if not (0 < C < 1 <= U):
        raise SpecError("hypotheses violated: need 0 < C < 1 <= U")
    if not (1 <= abs(q) <= U):
        raise SpecError("hypotheses violated: need 1 <= |q| <= U")
    if torus_norm(q * xi) > C + BOUND_TOL:
        raise SpecError(f"hypotheses violated: <q xi> = {torus_norm(q * xi):.3g} > C")
    v_bound = d * U ** (1.0 / d)
    d_bound = d * U ** (-(d - 1) / d) * C
    cands = half_space_vectors(d, int(math.floor(v_bound + 1e-9)))
    hit = np.flatnonzero(circle_norm(cands @ xi) <= d_bound + BOUND_TOL)
    if not len(hit):
        raise CertificateError("transference witness not found")
    return tuple(int(x) for x in cands[hit[0]])


# ---------------------------------------------------------------- unavoidable sections

def circle_cover_gaps(starts: np.ndarray, lengths: np.ndarray, tol: float = CIRCLE_TOL):
    """For each row of closed arcs [start, start + length] on R/Z, return (covered, gap_lo, gap_hi)."""
    starts = np.mod(np.atleast_2d(starts), 1.0)
    lengths = np.atleast_2d(lengths)
    nrow, narc = starts.shape
    order = np.argsort(starts, axis=1)
    s = np.take_along_axis(starts, order, axis=1)
    e = s + np.take_along_axis(lengths, order, axis=1)
    reach = np.maximum(e[:, 0], e.max(axis=1) - 1.0)
    gap_lo = np.full(nrow, np.nan)
    gap_hi = np.full(nrow, np.nan)
    open_ = np.ones(nrow, dtype=bool)
    for j in range(1, narc):
        hole = open_ & (s[:, j] > reach + tol)
        gap_lo[hole], gap_hi[hole] = reach[hole], s[hole, j]
        open_ &= ~hole
        reach = np.maximum(reach, e[:, j])
    hole = open_ & (reach + tol < s[:, 0] + 1.0)
    gap_lo[hole], gap_hi[hole] = reach[hole], s[hole, 0] + 1.0
    open_ &= ~hole
    full = np.any(lengths >= 1.0 - tol, axis=1)
    covered = open_ | full
    return covered, np.mod(gap_lo, 1.0), np.mod(gap_hi, 1.0)


def section_arcs(section: Section, qs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Images of each segment under x -> q.x mod 1, as (start, length) arrays of shape (len(qs), segments)."""
    a = np.array([seg[0] for seg in section.segments])
    dirs = section.directions
    qa = qs @ a.T
    qd = qs @ dirs.T
    start = np.where(qd >= 0, qa, qa + qd)
    return start, np.abs(qd)


@dataclass(frozen=True)
class UnavoidableCertificate:
    q_bound: float
    checked: int
    sigma_min: float
    min_length: float
    segments_used: tuple


@dataclass(frozen=True)
class Counterexample:
    q: tuple
    gap: tuple


def tail_bound(section: Section) -> tuple[float, float, float, tuple]:
    """Norm beyond which every q has an arc of length >= 1, from the best triple of segments."""
    dirs = section.directions
    lengths = np.linalg.norm(dirs, axis=1)
    units = dirs / lengths[:, None]
    best = None
    for trio in itertools.combinations(range(len(units)), 3):
        sig = np.linalg.svd(units[list(trio)], compute_uv=False)[-1]
        if sig < 1e-9:
            continue
        lmin = lengths[list(trio)].min()
        bound = math.sqrt(3) / (sig * lmin)
        if best is None or bound < best[0]:
            best = (bound, sig, lmin, trio)
    if best is None:
        raise SpecError("segment directions do not span R^3")
    return best


def primitive_shells(bound: float, chunk_radius: int = 8) -> Iterator[np.ndarray]:
    """Primitive integer 3-vectors (one of each +-pair) with norm <= bound, in increasing norm."""
    inner = 0.0
    outer = min(float(chunk_radius), bound)
    while inner < bound:
        r = int(math.floor(outer))
        cands = half_space_vectors(3, r).astype(np.int64)
        norms = np.linalg.norm(cands, axis=1)
        keep = (norms > inner) & (norms <= outer + 1e-12)
        cands, norms = cands[keep], norms[keep]
        g = np.gcd.reduce(np.abs(cands), axis=1)
        cands, norms = cands[g == 1], norms[g == 1]
        yield cands[np.argsort(norms, kind="stable")]
        inner, outer = outer, min(2 * outer, bound)
        if inner >= bound:
            break


def certify_unavoidable(section: Section, max_bound: float = 400.0):
    if len(section.segments) < 3:
        raise SpecError("need at least three segments")
    bound, sig, lmin, trio = tail_bound(section)
    checked = 0
    for qs in primitive_shells(bound):
        if not len(qs):
            continue
        if np.linalg.norm(qs[-1]) > max_bound:
            raise BudgetExceededError(f"tail bound {bound:.3g} exceeds {max_bound}", estimate=bound ** 3)
        starts, lengths = section_arcs(section, qs.astype(float))
        covered, lo, hi = circle_cover_gaps(starts, lengths)
        if not covered.all():
            i = int(np.argmin(covered))
            return Counterexample(tuple(int(v) for v in qs[i]), (float(lo[i]), float(hi[i])))
        checked += len(qs)
    return UnavoidableCertificate(float(bound), checked, float(sig), float(lmin), tuple(int(i) for i in trio))
