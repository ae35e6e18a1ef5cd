import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from denseforest.errors import BudgetExceededError, CertificateError, SpecError
from denseforest.forest import Section, axis_circle_section
from denseforest.torus import (Counterexample, OrbitQuery, UnavoidableCertificate, certify_unavoidable,
                               check_propreduc, circle_cover_gaps, circle_norm, half_space_vectors,
                               is_eps_dense, mahler_transfer, orbit_points, rational_orbit_lattices,
                               reduction_length, s_witness, tail_bound, witness_threshold)

PHI_ = (1 + math.sqrt(5)) / 2


def brute_dense(xi, M, eps, grid=400):
    """Sup distance from a fine grid of T^d to the orbit, compared with eps."""
    orbit = orbit_points(xi, M)
    d = orbit.shape[1]
    ticks = np.arange(grid) / grid
    pts = np.stack(np.meshgrid(*([ticks] * d), indexing="ij"), axis=-1).reshape(-1, d)
    far = circle_norm(pts[:, None, :] - orbit[None, :, :]).max(axis=2).min(axis=1).max()
    return far, 0.5 / grid


def test_circle_norm():
    assert np.allclose(circle_norm([0.2, 0.7, -0.3, 2.5]), [0.2, 0.3, 0.3, 0.5])


def test_half_space_vectors_cover_each_pair_once():
    vecs = half_space_vectors(2, 2)
    assert len(vecs) == (25 - 1) // 2
    keys = {tuple(v) for v in vecs}
    assert not any(tuple(-v) in keys for v in vecs)


def test_one_dim_density_exact():
    # golden rotation with M = 8: largest gap of the orbit decides density
    orbit = np.sort(orbit_points([1 / PHI_], 8)[:, 0])
    half_gap = np.diff(np.append(orbit, orbit[0] + 1)).max() / 2
    assert is_eps_dense(OrbitQuery(1, (1 / PHI_,), 8, half_gap + 1e-9))
    assert not is_eps_dense(OrbitQuery(1, (1 / PHI_,), 8, half_gap))


@settings(max_examples=25, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.sampled_from([0.2, 0.25, 0.3]))
def test_two_dim_density_agrees_with_fine_grid(x, y, eps):
    dense = is_eps_dense(OrbitQuery(2, (x, y), 64, eps))
    far, slack = brute_dense((x, y), 64, eps, grid=200)
    if far >= eps:
        assert not dense
    elif far + slack < eps:
        assert dense


def test_orbit_query_validation():
    with pytest.raises(SpecError):
        OrbitQuery(2, (0.1,), 5, 0.1)
    with pytest.raises(SpecError):
        OrbitQuery(1, (0.1,), 5, 0.0)
    with pytest.raises(BudgetExceededError):
        is_eps_dense(OrbitQuery(4, (0.1, 0.2, 0.3, 0.4), 5, 0.1))


def test_reduction_length():
    assert reduction_length(1, 0.25) == 8
    assert reduction_length(1, 0.125) == 16
    assert reduction_length(2, 0.25) == 64


def test_s_witness_for_rational_point():
    # xi = 1/3 has <3 xi> = 0
    assert s_witness([1 / 3], 1, 0.25, 8) == (3,)


def test_s_witness_bound_respected():
    u = s_witness([0.1234, 0.5678], 2, 0.25, 64)
    if u is not None:
        assert max(map(abs, u)) <= 8
        assert circle_norm(np.dot(u, [0.1234, 0.5678])) <= witness_threshold(2, 0.25, 64) + 1e-12


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=1))
def test_inclusion_holds_on_samples_d1(xi):
    assert check_propreduc(1, 0.25, [xi]).ok


def test_rational_orbit_lattice_index_and_duality():
    rol = rational_orbit_lattices([1, 2], 5)
    assert rol.index == 5
    basis = np.array([[float(x) for x in row] for row in rol.basis])
    dual = np.array(rol.dual_basis, float)
    assert np.allclose(dual.T @ basis, np.round(dual.T @ basis))
    # every dual vector u satisfies p.u = 0 mod q
    for col in dual.T:
        assert int(round(col @ np.array([1, 2]))) % 5 == 0
    # Lambda(p, q) contains p / q
    coeffs = np.linalg.solve(basis, np.array([1, 2]) / 5)
    assert np.allclose(coeffs, np.round(coeffs))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(-20, 20), min_size=2, max_size=3), st.integers(1, 30))
def test_rational_orbit_lattice_covolume(p, q):
    if math.gcd(q, *p) != 1:
        with pytest.raises(SpecError):
            rational_orbit_lattices(p, q)
        return
    rol = rational_orbit_lattices(p, q)
    det = np.linalg.det(np.array([[float(x) for x in row] for row in rol.basis]))
    assert math.isclose(abs(det), 1 / q, rel_tol=1e-9)
    assert abs(round(np.linalg.det(np.array(rol.dual_basis, float)))) == q


def test_mahler_transfer_finds_witness():
    xi = np.array([0.2, 0.4])
    v = mahler_transfer(xi, 5, 0.01, 25.0)
    assert max(map(abs, v)) <= 2 * 5
    assert circle_norm(np.dot(v, xi)) <= 2 * 25 ** -0.5 * 0.01 + 1e-12


def test_mahler_transfer_checks_hypotheses():
    with pytest.raises(SpecError):
        mahler_transfer([0.3], 1, 0.01, 10.0)
    with pytest.raises(SpecError):
        mahler_transfer([0.2], 5, 1.5, 10.0)


def test_circle_cover_gaps():
    covered, lo, hi = circle_cover_gaps(np.array([[0.0, 0.5]]), np.array([[0.5, 0.5]]))
    assert covered[0]
    covered, lo, hi = circle_cover_gaps(np.array([[0.0, 0.5]]), np.array([[0.4, 0.4]]))
    assert not covered[0]
    assert math.isclose(lo[0], 0.4) or math.isclose(lo[0], 0.9)


def test_axis_circle_section_certifies():
    cert = certify_unavoidable(axis_circle_section())
    assert isinstance(cert, UnavoidableCertificate)
    assert math.isclose(cert.q_bound, math.sqrt(3), rel_tol=1e-9)
    assert cert.checked > 0


def test_short_segments_yield_counterexample():
    segs = tuple((np.array(a), np.array(a) + 0.1 * np.eye(3)[i])
                 for i, a in enumerate(((0.1, 0.2, 0.3), (0.25, 0.5, 0.55), (0.4, 0.65, 0.8))))
    out = certify_unavoidable(Section(segs))
    assert isinstance(out, Counterexample)
    lo, hi = out.gap
    q = np.array(out.q, float)
    mid = np.mod(lo + (np.mod(hi - lo, 1.0)) / 2, 1.0)
    # the midpoint of the gap is missed by every segment image
    for a, b in Section(segs).segments:
        t = np.linspace(0, 1, 2001)
        vals = np.mod(q @ a + t * (q @ (b - a)), 1.0)
        assert circle_norm(vals - mid).min() > 0


def test_tail_bound_needs_spanning_directions():
    segs = tuple((np.array([0.1 * i, 0.3, 0.2 * i]), np.array([0.1 * i, 0.3, 0.2 * i]) + np.array([0.5, 0, 0]))
                 for i in range(3))
    with pytest.raises(SpecError):
        tail_bound(Section(segs))
