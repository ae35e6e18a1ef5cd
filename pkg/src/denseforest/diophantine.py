"""Uniformly Diophantine tuples: margins, certified infima, wedge bounds and exponents."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import BudgetExceededError, SpecError
from .torus import circle_norm, half_space_vectors

T_MAX_DEFAULT = {1: 1000, 2: 60, 3: 16}
U_BUDGET = 20_000_000


@dataclass(frozen=True)
class PhiSpec:
    """Phi(T) = c * T^(-tau) * log(T)^(-beta); the log factor uses max(log T, 1)."""

    c: float
    tau: float
    beta: float = 0.0

    def __post_init__(self):
        if not (self.c > 0 and self.tau > 0):
            raise SpecError("PhiSpec needs c > 0 and tau > 0")

    def __call__(self, T):
        T = np.asarray(T, dtype=float)
        val = self.c * T ** (-self.tau)
        if self.beta:
            val = val * np.maximum(np.log(T), 1.0) ** (-self.beta)
        return val if val.ndim else float(val)

    @classmethod
    def parse(cls, text: str) -> "PhiSpec":
        """Read strings like 'T^-2', '0.3*T^-1.2' or '0.3*T^-1.2*log^-1'."""
        c, tau, beta = 1.0, None, 0.0
        for part in text.replace(" ", "").split("*"):
            if part.startswith("T^"):
                tau = -float(part[2:])
            elif part.startswith("log^"):
                beta = -float(part[4:])
            elif part:
                c *= float(part)
        if tau is None:
            raise SpecError(f"cannot read Phi from {text!r}")
        return cls(c, tau, beta)


def _theta(theta) -> np.ndarray:
    th = np.asarray(theta, dtype=float)
    if th.ndim == 1:
        th = th[:, None]
    if th.ndim != 2 or th.size == 0:
        raise SpecError("theta must be an s x d array")
    return th


def _u_vectors(d: int, T: int) -> np.ndarray:
    if T < 1:
        raise SpecError("T must be >= 1")
    if (2 * T + 1) ** d > U_BUDGET:
        raise BudgetExceededError(f"(2T+1)^d = {(2 * T + 1) ** d} vectors; use a smaller T")
    # <-x> = <x>, so half of the nonzero vectors suffice
    return half_space_vectors(d, T).astype(float)


def _margins(theta: np.ndarray, us: np.ndarray, xis: np.ndarray, chunk: int = 1 << 22) -> np.ndarray:
    """Margin for each row of xis."""
    s = theta.shape[0]
    out = np.empty(len(xis))
    step = max(1, chunk // max(1, len(us) * s))
    for a in range(0, len(xis), step):
        diff = xis[a:a + step, None, :] - theta[None, :, :]          # (m, s, d)
        vals = circle_norm(np.einsum("msd,ud->msu", diff, us))       # (m, s, u)
        out[a:a + step] = vals.min(axis=2).max(axis=1)
    return out


def udt_margin(theta, T: int, xi) -> float:
    """max_i min_{0 < |u|_inf <= T} <u.(xi - theta_i)>."""
    th = _theta(theta)
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    return float(_margins(th, _u_vectors(th.shape[1], T), xi[None, :])[0])


@dataclass(frozen=True)
class UdtReport:
    T: int
    mesh: float
    raw: float
    slack: float
    certified: float
    argmin: tuple


def udt_certified_inf(theta, T: int, h: float, offset=0.0) -> UdtReport:
    """Grid minimum of the margin over T^d with a Lipschitz correction d*T*h."""
    th = _theta(theta)
    d = th.shape[1]
    per_axis = int(math.ceil(1.0 / h - 1e-12))
    if per_axis ** d > 50_000_000:
        raise BudgetExceededError(f"grid of {per_axis ** d} points exceeds the budget")
    ticks = np.arange(per_axis) / per_axis
    grid = np.stack(np.meshgrid(*([ticks] * d), indexing="ij"), axis=-1).reshape(-1, d)
    grid = grid + np.broadcast_to(np.asarray(offset, dtype=float), (d,))
    vals = _margins(th, _u_vectors(d, T), grid)
    i = int(np.argmin(vals))
    raw = float(vals[i])
    slack = d * T * h
    return UdtReport(T, h, raw, slack, raw - slack, tuple(grid[i].tolist()))


def bad_pair_margin(sigma: float, T: int) -> float:
    """T^3 * min over 1 <= q, v <= T of <q v sigma> / sqrt(q^2 + v^2)."""
    q = np.arange(1, T + 1, dtype=np.int64)
    qq, vv = np.meshgrid(q, q, indexing="ij")
    prod = (qq * vv).astype(float)
    vals = circle_norm(prod * sigma) / np.hypot(qq, vv)
    return float(T) ** 3 * float(vals.min())


def schmidt_margin(a: float, b: float, T: int, eta: float) -> float:
    """min over 0 < max(|P|, |Q|) <= T of max(|P|, |Q|)^(2+eta) <P a + Q b>."""
    pq = half_space_vectors(2, T).astype(float)
    height = np.abs(pq).max(axis=1)
    return float((height ** (2 + eta) * circle_norm(pq @ np.array([a, b]))).min())


def phi_visibility_exponent(d: int, tau) -> Fraction:
    """Exponent e with visibility O(eps^-e) for Phi(T) = c T^-tau: e = d(tau - d + 1)."""
    tau = Fraction(tau)
    if tau < d:
        raise SpecError(f"tau = {tau} < d = {d}: no tuple of this type exists")
    return d * (tau - d + 1)


def convergence_threshold(s: int, d: int) -> Fraction:
    """Smallest tau making sum_m 2^(m d (s+1) - m tau (s - d)) converge: d(s+1)/(s-d)."""
    if s <= d:
        raise SpecError(f"need s > d, got s = {s}, d = {d}")
    return Fraction(d * (s + 1), s - d)


def alpha_exponent(n: int, s: int) -> Fraction:
    """n (n-1)^2 / (s - (n-1))."""
    if n < 2 or s < n:
        raise SpecError(f"need s >= n >= 2, got n = {n}, s = {s}")
    return Fraction(n * (n - 1) ** 2, s - (n - 1))


def wedge_norm(vectors) -> float:
    """Norm of v_1 ^ ... ^ v_k, i.e. sqrt(det Gram), via singular values."""
    v = np.atleast_2d(np.asarray(vectors, dtype=float))
    if v.shape[0] > v.shape[1]:
        return 0.0
    return float(np.prod(np.linalg.svd(v, compute_uv=False)))


def projective_residual(U, y) -> float:
    """Distance from y to the column span of U, by least squares."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    y = np.asarray(y, dtype=float)
    if U.shape[0] != y.shape[0]:
        U = U.T
    if not np.any(U):
        raise SpecError("U must be nonzero")
    coef, *_ = np.linalg.lstsq(U, y, rcond=None)
    return float(np.linalg.norm(y - U @ coef))


def independent_columns(U, tol: float = 1e-9) -> np.ndarray:
    U = np.atleast_2d(np.asarray(U, dtype=float))
    keep = []
    for j in range(U.shape[1]):
        trial = U[:, keep + [j]]
        if np.linalg.matrix_rank(trial, tol=tol) == len(keep) + 1:
            keep.append(j)
    return U[:, keep]


def wedge_residual(U, y) -> float:
    """|X ^ y| / |X| for an independent set X of columns of U."""
    X = independent_columns(U)
    return wedge_norm(np.vstack([X.T, np.asarray(y, float)])) / wedge_norm(X.T)


# ---------------------------------------------------------------- violations of uniform type

@dataclass(frozen=True)
class ViolationCheck:
    T: int
    xi: tuple
    U: tuple
    p: tuple
    residual: float
    bound: float
    p_bound_ok: bool

    @property
    def ok(self) -> bool:
        return self.residual < self.bound and self.p_bound_ok


@dataclass(frozen=True)
class ConsistencyReport:
    trials: int
    found: int
    skipped: int
    failures: tuple
    checks: tuple

    @property
    def passed(self) -> bool:
        return not self.failures


def reconstruct(theta, T: int, xi, phi: PhiSpec) -> ViolationCheck | None:
    """If xi violates the type-Phi inequality at T, rebuild (U, p) and evaluate the wedge bound."""
    th = _theta(theta)
    s, d = th.shape
    xi = np.mod(np.atleast_1d(np.asarray(xi, dtype=float)), 1.0)
    us = _u_vectors(d, T)
    level = phi(T)
    rows, ps = [], []
    for theta_i in th:
        vals = us @ (xi - theta_i)
        dist = circle_norm(vals)
        k = int(np.argmin(dist))
        if dist[k] >= level:
            return None
        rows.append(us[k])
        ps.append(float(np.round(vals[k])))
    U = np.array(rows)                       # s x d, row i is u_i
    p = np.array(ps)
    t = np.einsum("sd,sd->s", U, th)
    y = p + t
    residual = projective_residual(U, y)
    p_cap = 4 * math.sqrt(d) * np.linalg.norm(U, axis=1) * np.maximum(1.0, np.abs(th).max(axis=1))
    return ViolationCheck(T, tuple(xi.tolist()), tuple(map(tuple, U.astype(int).tolist())),
                          tuple(int(v) for v in p), residual, math.sqrt(s) * level,
                          bool(np.all(np.abs(p) <= p_cap + 1e-9)))


def find_violation(theta, T: int, phi: PhiSpec, offset: float = 0.0, coarse: int = 20_000,
                   levels: int = 4, keep: int = 8):
    """Coarse grid over xi, then local refinement around the best cells, until the margin
    at T drops below Phi(T)."""
    th = _theta(theta)
    d = th.shape[1]
    us = _u_vectors(d, T)
    level = phi(T)
    per_axis = max(2, int(coarse ** (1.0 / d)))
    ticks = (np.arange(per_axis) + offset) / per_axis
    pts = np.stack(np.meshgrid(*([ticks] * d), indexing="ij"), axis=-1).reshape(-1, d)
    cell = 1.0 / per_axis
    sub = max(3, int(round(4096 ** (1.0 / d))))
    for _ in range(levels + 1):
        vals = _margins(th, us, pts)
        i = int(np.argmin(vals))
        if vals[i] < level:
            return np.mod(pts[i], 1.0)
        best = pts[np.argsort(vals)[:keep]]
        local = np.linspace(-cell, cell, sub)
        offs = np.stack(np.meshgrid(*([local] * d), indexing="ij"), axis=-1).reshape(-1, d)
        pts = (best[:, None, :] + offs[None, :, :]).reshape(-1, d)
        cell = 2 * cell / (sub - 1)
    return None


def udt_violation_consistency(theta, phi: PhiSpec, trials: int = 8, T_max: int | None = None,
                              seed: int = 0) -> ConsistencyReport:
    th = _theta(theta)
    d = th.shape[1]
    T_max = T_max or T_MAX_DEFAULT.get(d, 8)
    schedule = [T for T in (1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1000) if T <= T_max]
    rng = np.random.default_rng(seed)
    checks, failures, skipped = [], [], 0
    for k in range(trials):
        T = schedule[k % len(schedule)]
        xi = find_violation(th, T, phi, offset=0.0 if k == 0 else float(rng.random()))
        if xi is None:
            skipped += 1
            continue
        check = reconstruct(th, T, xi, phi)
        if check is None:
            skipped += 1
            continue
        checks.append(check)
        if not check.ok:
            failures.append(check)
    return ConsistencyReport(trials, len(checks), skipped, tuple(failures), tuple(checks))


# ---------------------------------------------------------------- exception volume

@dataclass(frozen=True)
class VolumeEstimate:
    T: int
    samples: int
    hits: int
    estimate: float
    bound: float
    ratio: float
    stderr: float
    note: str = ""


def _rank_one_hits(g: np.ndarray, t: np.ndarray, caps: np.ndarray, rho: float) -> np.ndarray:
    """For each row of t, is there an integer p with |p_i| <= caps_i and dist(p + t, R g) < rho?"""
    m, s = t.shape
    gh = g / np.linalg.norm(g)

    def residual(pt):
        return np.linalg.norm(pt - (pt @ gh)[..., None] * gh, axis=-1)

    direct = -np.round(t)
    ok = np.all(np.abs(direct) <= caps, axis=1) & (residual(direct + t) < rho)
    j = int(np.argmax(np.abs(g)))
    others = [i for i in range(s) if i != j]
    k = int(math.ceil(max(0.0, rho * (1 + math.sqrt(s)) - 0.5)))
    k = min(k, 3)
    offs = np.array(list(itertools.product(range(-k, k + 1), repeat=len(others))), dtype=float)
    cap_j = int(math.floor(caps[j]))
    for mj in range(-cap_j, cap_j + 1):
        todo = ~ok
        if not todo.any():
            break
        tt = t[todo]
        lam = (mj + tt[:, j]) / g[j]
        line = -tt + lam[:, None] * g
        base = np.round(line[:, others])
        p = np.empty((len(tt), len(offs), s))
        p[:, :, j] = mj
        p[:, :, others] = base[:, None, :] + offs[None, :, :]
        good = np.all(np.abs(p) <= caps + 1e-9, axis=2) & (residual(p + tt[:, None, :]) < rho)
        ok[np.flatnonzero(todo)[good.any(axis=1)]] = True
    return ok


def _brute_hits(U: np.ndarray, t: np.ndarray, caps: np.ndarray, rho: float) -> np.ndarray:
    box = [np.arange(-int(c), int(c) + 1) for c in np.floor(caps)]
    size = float(np.prod([len(b) for b in box]))
    if size > 2_000_000:
        raise BudgetExceededError(f"{size:.3g} candidate p vectors exceed the budget")
    ps = np.stack(np.meshgrid(*box, indexing="ij"), axis=-1).reshape(-1, U.shape[0]).astype(float)
    q, _ = np.linalg.qr(independent_columns(U))
    out = np.zeros(len(t), dtype=bool)
    for i, tt in enumerate(t):
        pt = ps + tt
        res = np.linalg.norm(pt - (pt @ q) @ q.T, axis=1)
        out[i] = bool((res < rho).any())
    return out


def exception_volume_mc(U, T: int, phi: PhiSpec, N: float, samples: int, seed: int = 0) -> VolumeEstimate:
    """Monte Carlo volume of Theta in (-N, N)^(d x s) admitting a bounded p with small wedge residual."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    if U.shape[0] == 1 and U.shape[1] > 1:
        U = U.T
    s, d = U.shape
    sup = np.abs(U).max(axis=1)
    if np.any(sup < 1) or np.any(sup > T) or np.any(U != np.round(U)):
        raise SpecError("U must be an integer matrix with 1 <= |u_i|_inf <= T for every row")
    r = int(np.linalg.matrix_rank(U))
    rng = np.random.default_rng(seed)
    theta = rng.uniform(-N, N, size=(samples, s, d))
    t = np.einsum("sd,msd->ms", U, theta)
    caps = 4 * math.sqrt(d) * N * np.linalg.norm(U, axis=1)
    rho = math.sqrt(s) * phi(T)
    if r == 1:
        col = independent_columns(U)[:, 0]
        g = col / np.abs(col[np.abs(col) > 0.5]).min()
        g = np.round(g * 1e6) / 1e6
        hits = _rank_one_hits(g, t, caps, rho)
    else:
        hits = _brute_hits(U, t, caps, rho)
    nhit = int(hits.sum())
    volume = (2.0 * N) ** (d * s)
    frac = nhit / samples
    est = volume * frac
    stderr = volume * math.sqrt(frac * (1 - frac) / samples)
    bound = float(T) ** r * phi(T) ** (s - r)
    note = "" if nhit else f"no hits in {samples} samples; estimate below {volume / samples:.3g}"
    return VolumeEstimate(T, samples, nhit, est, bound, est / bound, stderr, note)
