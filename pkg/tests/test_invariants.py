"""Property tests for the structural invariants of each module."""
import itertools
import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from denseforest.diophantine import projective_residual, udt_certified_inf, udt_margin, wedge_residual
from denseforest.forest import (HONEYCOMB, PHI, CutProjectSpec, axis_circle_section, cut_and_project,
                                generalized_forest, generate, peres_forest, tbg_union)
from denseforest.lattice import Grid, Lattice, Window, banaszczyk_check, enumerate_points, same_grid, successive_minima
from denseforest.torus import (OrbitQuery, certify_unavoidable, circle_norm, is_eps_dense, primitive_shells,
                               rational_orbit_lattices)
from denseforest.visibility import visibility_curve


def as_set(points, digits=9):
    return {tuple(np.round(p, digits)) for p in points}


@settings(max_examples=30, deadline=None)
@given(arrays(float, (2, 2), elements=st.floats(-3, 3)), arrays(float, 2, elements=st.floats(-2, 2)),
       st.floats(0.5, 5))
def test_enumeration_symmetric_about_shift(basis, shift, radius):
    if abs(np.linalg.det(basis)) < 0.2 or np.linalg.cond(basis) > 50:
        return
    pts = enumerate_points(Grid(Lattice(basis), shift), Window(shift, radius))
    assert as_set(pts) == as_set(2 * shift - pts)


@settings(max_examples=15, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=2, max_size=3), st.randoms())
def test_generalized_forest_ignores_row_order(theta, rnd):
    perm = list(theta)
    rnd.shuffle(perm)
    w = Window(np.zeros(2), 6.0)
    a = generate(generalized_forest(theta), w).points
    b = generate(generalized_forest(perm), w).points
    assert as_set(a) == as_set(b)


def test_generalized_forest_examples():
    peres = peres_forest()
    gen = generalized_forest([0.0, PHI])
    assert len(gen.grids) == len(peres.grids)
    assert all(any(same_grid(g, h) for h in peres.grids) for g in gen.grids)
    assert len(generalized_forest([0.0]).grids) == 1
    rng = np.random.default_rng(0)
    assert len(generalized_forest(rng.random((3, 2))).grids) <= 9


def test_peres_examples():
    w = Window(np.zeros(2), 10.0)
    cloud = generate(peres_forest(), w).points
    assert (0.0, 0.0) in as_set(cloud)
    # union count equals the per-grid counts minus brute-force overlaps
    per_grid = [enumerate_points(g, w) for g in peres_forest().grids]
    assert len(cloud) == len(as_set(np.vstack(per_grid)))
    # on the column x = 1 the second lattice sits at y in phi + Z
    second = per_grid[1]
    col = second[np.isclose(second[:, 0], 1.0)]
    assert len(col) and np.allclose(circle_norm(col[:, 1] - PHI), 0.0, atol=1e-9)


def test_tbg_single_copy_is_honeycomb():
    union = tbg_union(1, [0.0])
    assert same_grid(union.grids[0], Grid(Lattice(HONEYCOMB)))


def test_trivial_strip_cut_and_project():
    spec = CutProjectSpec(np.array([[1.0], [0.0]]), np.array([[0.0], [1.0]]), np.zeros(2),
                          np.array([-0.5]), np.array([0.5]))
    pts = cut_and_project(spec, Window(np.zeros(1), 7.5))
    assert pts[:, 0].tolist() == list(range(-7, 8))
    empty = CutProjectSpec(np.array([[1.0], [0.0]]), np.array([[0.0], [1.0]]), np.zeros(2),
                           np.array([0.3]), np.array([0.3]))
    assert len(cut_and_project(empty, Window(np.zeros(1), 7.5))) == 0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_cut_and_project_stable_under_boundary_closure(seed):
    rng = np.random.default_rng(seed)
    full = np.linalg.qr(rng.normal(size=(3, 3)))[0]
    lo, hi = np.array([-0.3]), np.array([0.4])
    w = Window(np.zeros(2), 4.0)
    inner = CutProjectSpec(full[:, :2], full[:, 2:], rng.random(3), lo + 1e-7, hi - 1e-7)
    outer = CutProjectSpec(full[:, :2], full[:, 2:], rng.random(3) * 0 + inner.lattice_shift, lo - 1e-7, hi + 1e-7)
    ms = np.array(list(itertools.product(range(-9, 10), repeat=3)), float) + inner.lattice_shift
    internal = ms @ full[:, 2]
    if np.min(np.abs(np.concatenate([internal - lo, internal - hi]))) < 1e-6:
        return
    assert as_set(cut_and_project(inner, w)) == as_set(cut_and_project(outer, w))


def test_visibility_beats_trivial_bound():
    rep = visibility_curve(peres_forest(), (0.4, 0.2, 0.1), Window(np.zeros(2), 30.0))
    c = rep.records[0].length * rep.records[0].epsilon
    assert all(r.length >= c / r.epsilon - 1e-9 for r in rep.records)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(-30, 30), min_size=2, max_size=2), st.integers(2, 40))
def test_banaszczyk_on_rational_orbit_lattices(p, q):
    if math.gcd(q, *p) != 1:
        return
    rol = rational_orbit_lattices(p, q)
    assert banaszczyk_check(rol.lattice, samples=32).ok


@settings(max_examples=80, deadline=None)
@given(st.lists(st.integers(0, 60), min_size=2, max_size=2), st.integers(5, 61), st.sampled_from([0.3, 0.5, 0.8]))
def test_large_dual_minimum_implies_half_eps_density(p, q, eps):
    if math.gcd(q, *p) != 1:
        return
    rol = rational_orbit_lattices(p, q)
    if successive_minima(rol.dual).lambdas[0] > 2 / eps:
        xi = tuple(v / q for v in p)
        assert is_eps_dense(OrbitQuery(2, xi, q - 1, eps / 2))


def test_unavoidable_certificate_covers_random_cosets():
    section = axis_circle_section()
    cert = certify_unavoidable(section)
    qs = np.vstack(list(primitive_shells(cert.q_bound)))
    rng = np.random.default_rng(0)
    pick = qs[rng.integers(0, len(qs), 100_000)].astype(float)
    offsets = rng.random(100_000)
    hit = np.zeros(len(pick), dtype=bool)
    for a, b in section.segments:
        start, span = pick @ a, pick @ (b - a)
        lo = np.where(span >= 0, start, start + span)
        rel = np.mod(offsets - lo, 1.0)
        hit |= (rel <= np.abs(span) + 1e-12) | (np.abs(span) >= 1.0)
    assert hit.all()


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=2, max_size=3), st.integers(-3, 3), st.floats(0, 1), st.floats(0, 1),
       st.integers(1, 20))
def test_margin_invariances(theta, k, alpha, xi, T):
    base = udt_margin(theta, T, xi)
    shifted = list(theta)
    shifted[0] += k
    assert math.isclose(udt_margin(shifted, T, xi), base, abs_tol=1e-9)
    moved = [t + alpha for t in theta]
    assert math.isclose(udt_margin(moved, T, xi + alpha), base, abs_tol=1e-9)
    assert udt_margin(theta, T + 1, xi) <= base + 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 12), st.lists(st.integers(0, 50), min_size=2, max_size=3))
def test_rational_tuple_margin_vanishes(Q, nums):
    theta = [n / Q for n in nums]
    assert udt_certified_inf(theta, Q, 1 / (4 * Q)).raw == 0.0


def test_wedge_and_projective_residual_agree():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(1000):
        s = int(rng.integers(2, 7))
        r = int(rng.integers(1, min(3, s - 1) + 1))
        U = rng.normal(size=(s, r))
        y = rng.normal(size=s)
        worst = max(worst, abs(wedge_residual(U, y) - projective_residual(U, y)))
    assert worst <= 1e-9
