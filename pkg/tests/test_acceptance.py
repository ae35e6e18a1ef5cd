"""Acceptance suite: one PASS/FAIL line per criterion, tolerances and runtime limits pinned.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines as they are produced;
they are also repeated in the terminal summary.
"""
import math
import time

import numpy as np
import pytest
from conftest import ACCEPTANCE_LINES

from denseforest.diophantine import (PhiSpec, alpha_exponent, bad_pair_margin, convergence_threshold,
                                     exception_volume_mc, phi_visibility_exponent, udt_certified_inf,
                                     udt_violation_consistency)
from denseforest.forest import (GENERIC_PLANE, PHI, THREE_LATTICE, ToralVisitSpec, axis_circle_section,
                                generate, golden_cut_project, min_pairwise_distance, peres_forest,
                                three_lattice_forest)
from denseforest.lattice import (Grid, Lattice, Window, banaszczyk_check, covering_upper_bound, covolume, dual,
                                 successive_minima)
from denseforest.torus import Counterexample, certify_unavoidable, check_propreduc, reduction_length
from denseforest.visibility import empty_slab_certificate, verify_slab, visibility_curve

# regression constant: mpmath brute force at 40 digits over 1 <= q, v <= 100 gives 2.0787066168334899
BAD_PAIR_MARGIN_T100 = 2.0787066168334899
BAD_PAIR_TOL = 1e-8
VISIBILITY_RADIUS = 2000.0
VISIBILITY_EPS = (0.4, 0.2, 0.1)
VISIBILITY_LINE_BUDGET = 50_000


def record(number, title: str, ok: bool, detail: str, elapsed: float, limit: float) -> bool:
    passed = bool(ok) and elapsed < limit
    line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {title} [{detail}; {elapsed:.1f}s of {limit:.0f}s]"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return passed


def _grid_plus_random(d: int, count: int, seed: int = 0) -> np.ndarray:
    per_axis = int(round((count // 2) ** (1 / d)))
    ticks = (np.arange(per_axis) + 0.5) / per_axis
    grid = np.stack(np.meshgrid(*([ticks] * d), indexing="ij"), axis=-1).reshape(-1, d)
    rng = np.random.default_rng(seed)
    return np.vstack([grid, rng.random((count - len(grid), d))])


def test_orbit_witness_inclusion_d1():
    start = time.perf_counter()
    xs = _grid_plus_random(1, 10_000)
    reports = [check_propreduc(1, eps, xs) for eps in (0.25, 0.125)]
    elapsed = time.perf_counter() - start
    ms = [r.M for r in reports]
    ok = ms == [8, 16] and all(r.ok and r.samples == 10_000 for r in reports)
    detail = f"M={ms}, not dense {[r.not_dense for r in reports]}, violations {[len(r.violations) for r in reports]}"
    assert record(1, "non-dense orbits have small dual witnesses, d=1", ok, detail, elapsed, 10)


def test_orbit_witness_inclusion_d2():
    start = time.perf_counter()
    xs = np.random.default_rng(0).random((2000, 2))
    rep = check_propreduc(2, 0.25, xs)
    elapsed = time.perf_counter() - start
    ok = rep.M == 64 and rep.ok
    detail = f"M={rep.M}, not dense {rep.not_dense}, violations {len(rep.violations)}"
    assert record(2, "non-dense orbits have small dual witnesses, d=2", ok, detail, elapsed, 60)


def test_random_lattice_properties():
    start = time.perf_counter()
    rng = np.random.default_rng(0)
    failures = {"duality": 0, "sandwich": 0, "banaszczyk": 0}
    worst = 0.0
    for d in (2, 3, 4):
        for i in range(1000):
            lat = Lattice(rng.normal(size=(d, d)))
            if abs(covolume(lat) * covolume(dual(lat)) - 1) > 1e-6:
                failures["duality"] += 1
            minima = successive_minima(lat)
            bz = banaszczyk_check(lat, samples=128, seed=i)
            # lambda_d / 2 <= mu <= d lambda_d / 2, tested against an upper bound and a sampled lower bound on mu
            ordered = all(a <= b * (1 + 1e-12) for a, b in zip(minima.lambdas, minima.lambdas[1:]))
            if not (ordered and minima.covering_lo <= covering_upper_bound(lat) * (1 + 1e-9)
                    and bz.covering_estimate <= minima.covering_hi * (1 + 1e-9)):
                failures["sandwich"] += 1
            if not bz.product <= d / 2 + 1e-9:
                failures["banaszczyk"] += 1
            worst = max(worst, bz.product / (d / 2))
    elapsed = time.perf_counter() - start
    ok = not any(failures.values())
    detail = f"failures {failures}, largest product / (d/2) = {worst:.3f}"
    assert record(3, "random lattice duality, sandwich and transference", ok, detail, elapsed, 60)


def test_three_lattice_forest():
    start = time.perf_counter()
    exact = THREE_LATTICE.identity_product() == 1 and THREE_LATTICE.identity_ratio() == -1
    forest = three_lattice_forest()
    dists = []
    for r in (250.0, 500.0, 1000.0):
        cloud = generate(forest, Window(np.zeros(2), r))
        dists.append(min_pairwise_distance(cloud.points))
    elapsed = time.perf_counter() - start
    spread = max(dists) - min(dists)
    ok = exact and min(dists) > 0 and spread <= 1e-12
    detail = f"exact identities {exact}, min distances {[f'{x:.15f}' for x in dists]}, spread {spread:.2e}"
    assert record(4, "three-lattice identities and uniform discreteness", ok, detail, elapsed, 30)


@pytest.fixture(scope="module")
def visibility_runs():
    window = Window(np.zeros(2), VISIBILITY_RADIUS)
    runs = {}
    start = time.perf_counter()
    specs = {"Z2": Grid(Lattice(np.eye(2))), "peres": peres_forest(), "three_lattice": three_lattice_forest()}
    for name, spec in specs.items():
        runs[name] = visibility_curve(spec, VISIBILITY_EPS, window, line_budget=VISIBILITY_LINE_BUDGET)
    runs["elapsed"] = time.perf_counter() - start
    return runs


def _curve_detail(rep) -> str:
    return f"lengths {[round(x, 3) for x in rep.lengths]}, slope {rep.slope:.3f}, {rep.notes[0] if rep.notes else ''}"


def test_visibility_integer_lattice_not_forest(visibility_runs):
    rep = visibility_runs["Z2"]
    ok = rep.not_a_forest and all(r.spanning for r in rep.records)
    assert record("5a", "Z^2 admits window-spanning empty segments", ok, _curve_detail(rep),
                  visibility_runs["elapsed"], 600)


def test_visibility_peres_slope(visibility_runs):
    rep = visibility_runs["peres"]
    ok = rep.slope <= 3.5 and not rep.not_a_forest
    assert record("5b", "Peres forest visibility slope <= 3.5", ok, _curve_detail(rep), visibility_runs["elapsed"], 600)


def test_visibility_three_lattice_slope(visibility_runs):
    rep = visibility_runs["three_lattice"]
    ok = rep.slope <= 5.5 and not rep.not_a_forest
    assert record("5c", "three-lattice visibility slope <= 5.5", ok, _curve_detail(rep),
                  visibility_runs["elapsed"], 600)


def test_visibility_monotone(visibility_runs):
    reps = [visibility_runs[k] for k in ("Z2", "peres", "three_lattice")]
    ok = all(r.monotone for r in reps) and all(rec.verified for r in reps for rec in r.records)
    detail = f"monotone {[r.monotone for r in reps]}, witnesses rechecked exactly"
    assert record("5d", "max empty length monotone in epsilon", ok, detail, visibility_runs["elapsed"], 600)


def test_golden_empty_slab():
    start = time.perf_counter()
    spec = golden_cut_project()
    window = Window(np.zeros(2), 1e4)
    cert = empty_slab_certificate(spec, window)
    cloud = generate(spec, window)
    holds = verify_slab(cert, cloud)
    widened = verify_slab(cert.widened(2.0), cloud)
    elapsed = time.perf_counter() - start
    ok = holds and not widened and len(cloud) > 0
    detail = (f"q={list(cert.q)}, eps={cert.epsilon:.4f}, {len(cloud)} points, verified {holds}, "
              f"widened 2x verified {widened}")
    assert record(6, "empty slab certificate on the golden cut-and-project set", ok, detail, elapsed, 60)


def test_unavoidable_section_and_visits():
    start = time.perf_counter()
    section = axis_circle_section()
    cert = certify_unavoidable(section)
    certified = not isinstance(cert, Counterexample)
    spec = ToralVisitSpec(section, GENERIC_PLANE, np.zeros(3))
    dists, counts = [], []
    for r in (50.0, 100.0):
        cloud = generate(spec, Window(np.zeros(2), r))
        counts.append(len(cloud))
        dists.append(min_pairwise_distance(cloud.points) if len(cloud) > 1 else 0.0)
    stable = min(dists) > 0 and abs(dists[0] - dists[1]) <= 1e-3 * max(dists)
    curve = visibility_curve(spec, (0.4, 0.2, 0.1), Window(np.zeros(2), 50.0))
    lengths = curve.lengths
    grows_as_eps_shrinks = all(a <= b for a, b in zip(lengths, lengths[1:])) and curve.monotone
    elapsed = time.perf_counter() - start
    ok = certified and min(counts) > 0 and stable and grows_as_eps_shrinks
    detail = (f"tail bound {cert.q_bound if certified else None}, points {counts}, "
              f"min distances {[f'{x:.9f}' for x in dists]}, lengths {[round(x, 3) for x in lengths]}")
    assert record(7, "axis-circle section certified; visit set discrete and monotone", ok, detail, elapsed, 300)


def test_udt_margins():
    start = time.perf_counter()
    margins = {T: bad_pair_margin(PHI, T) for T in (10, 100, 1000)}
    pinned = math.isclose(margins[100], BAD_PAIR_MARGIN_T100, rel_tol=BAD_PAIR_TOL)
    golden = udt_certified_inf((0.0, PHI), 10, 1e-4)
    kill = udt_certified_inf((0.0, 0.5), 10, 1e-4)
    elapsed = time.perf_counter() - start
    ok = all(v > 0 for v in margins.values()) and pinned and golden.certified > 0 and kill.raw == 0.0
    detail = (f"bad pair margins {({k: round(v, 6) for k, v in margins.items()})}, pinned {pinned}, "
              f"golden certified {golden.certified:.5f}, rational raw {kill.raw}")
    assert record(8, "uniformly Diophantine margins", ok, detail, elapsed, 120)


def test_exponent_identities():
    start = time.perf_counter()
    bad = [(n, s) for n in range(2, 7) for s in range(n, 51)
           if phi_visibility_exponent(n - 1, convergence_threshold(s, n - 1)) != (n - 1) + alpha_exponent(n, s)]
    tau = convergence_threshold(2, 1)
    special = phi_visibility_exponent(1, tau)
    elapsed = time.perf_counter() - start
    ok = not bad and tau == 3 and special == 3
    detail = f"mismatches {bad}, (n, s) = (2, 2) gives tau {tau} and exponent {special}"
    assert record(9, "exact exponent identities", ok, detail, elapsed, 1)


def test_violation_reconstruction():
    start = time.perf_counter()
    rng = np.random.default_rng(0)
    phi = PhiSpec(0.3, 1.2)
    found = failures = 0
    for k in range(200):
        rep = udt_violation_consistency(rng.random((3, 1)), phi, seed=k)
        found += rep.found
        failures += len(rep.failures)
    elapsed = time.perf_counter() - start
    ok = found > 0 and failures == 0
    assert record(10, "every found violation has a small wedge residual", ok,
                  f"{found} violations found, {failures} failures", elapsed, 300)


def test_exception_volume_ratio():
    start = time.perf_counter()
    U = np.array([[1.0], [1.0], [1.0]])
    phi = PhiSpec(1.0, 2.0)
    ests = [exception_volume_mc(U, T, phi, 1.0, 100_000, seed=0) for T in (4, 8, 16)]
    elapsed = time.perf_counter() - start
    ratios = [e.ratio for e in ests]
    spread = max(ratios) / min(ratios) if min(ratios) > 0 else math.inf
    detail = (f"ratios {[round(x, 2) for x in ratios]} +- {[round(e.stderr / e.bound, 2) for e in ests]}, "
              f"largest/smallest {spread:.2f}")
    assert record(11, "exception volume ratio shows no growth (largest/smallest <= 3)", spread <= 3, detail,
                  elapsed, 120)
