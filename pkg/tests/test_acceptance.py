"""Acceptance gate: one test per release criterion, tolerances pinned.

Each criterion is a single test function so `pytest -v` prints one
pass/fail line per criterion.  Tolerances and runtime budgets appear
inline next to the assertion they bound.
"""

import math
import time

import numpy as np
import pytest

from normfield.energy import (
    AugmentedPoint,
    diagnose_psp_sequence,
    differential,
    energies,
    psp_residual,
)
from normfield.grid import Profile, grid_for_mu, make_grid
from normfield.mass import (
    minimize_on_sphere,
    solve_normalized,
    threshold_curve,
)
from normfield.minimax import deform, mp_level_least_energy, mp_level_path
from normfield.nonlin import PurePower, Saturating
from normfield.shoot import find_bound_state

QUAD = PurePower(2, N=2)          # mass-subcritical quadratic source
CRIT = PurePower(3, N=2)          # the mass-critical power in dimension 2
SAT = Saturating(3, 2, N=2)       # finite positivity boundary, finite m0

GRID_N = 1026
GRID_R0 = 18.0


def _random_point(rng, grids):
    N = int(rng.integers(1, 5))
    g = grids[N]
    span = rng.uniform(0.5, 2.0)
    u = rng.standard_normal(g.n) * np.exp(-g.r / span)
    theta = rng.uniform(-1.0, 1.0)
    lam = rng.uniform(-2.0, 1.0)
    m = rng.uniform(0.5, 20.0)
    return AugmentedPoint(theta, lam, Profile(g, u)), m


def test_criterion_01_exact_identities_on_random_points():
    t0 = time.monotonic()
    rng = np.random.default_rng(1)
    grids = {N: make_grid(N, 8.0, 101) for N in (1, 2, 3, 4)}
    for _ in range(1000):
        pt, m = _random_point(rng, grids)
        g = pt.u.grid
        N = g.N
        rep = energies(pt, nl=QUAD if N == 2 else PurePower(2, N=N), m=m)
        el = math.exp(pt.lam)
        grad2 = g.grad_dot(pt.u.u, pt.u.u)
        # level-shift identity: I = Ihat - (e^lam/2) m
        scale1 = max(1.0, abs(rep.Ihat), 0.5 * el * m)
        assert abs(rep.I - (rep.Ihat - 0.5 * el * m)) <= 1e-12 * scale1
        # dilation identity: P = N(I + (m/2)e^lam) - grad2
        rhs = N * (rep.I + 0.5 * m * el) - grad2
        scale2 = max(1.0, abs(rep.P), grad2, N * abs(rep.I))
        assert abs(rep.P - rhs) <= 1e-12 * scale2
    assert time.monotonic() - t0 < 10.0


def test_criterion_02_differential_matches_fd_at_second_order():
    t0 = time.monotonic()
    rng = np.random.default_rng(2)
    grids = {N: make_grid(N, 8.0, 101) for N in (1, 2, 3, 4)}
    errs = {"theta": [[], []], "lambda": [[], []], "u": [[], []]}
    for _ in range(100):
        pt, m = _random_point(rng, grids)
        g = pt.u.grid
        # q=2.5 keeps the second derivative of the source continuous at 0,
        # so central differences are cleanly second order
        nl = PurePower(2.5, N=g.N)
        d = differential(pt, nl, m)
        v = rng.standard_normal(g.n) * np.exp(-g.r)
        e_grad = math.exp((g.N - 2) * pt.theta)
        e_mass = math.exp(g.N * pt.theta)
        du_exact = e_grad * g.grad_dot(d.grad_u.u, v) + e_mass * g.l2dot(
            d.grad_u.u, v
        )
        for lvl, h in enumerate((1e-3, 5e-4)):
            Jp = energies(
                AugmentedPoint(pt.theta + h, pt.lam, pt.u), nl, m
            ).J
            Jm = energies(
                AugmentedPoint(pt.theta - h, pt.lam, pt.u), nl, m
            ).J
            errs["theta"][lvl].append((Jp - Jm) / (2 * h) - d.d_theta)
            Jp = energies(
                AugmentedPoint(pt.theta, pt.lam + h, pt.u), nl, m
            ).J
            Jm = energies(
                AugmentedPoint(pt.theta, pt.lam - h, pt.u), nl, m
            ).J
            errs["lambda"][lvl].append((Jp - Jm) / (2 * h) - d.d_lambda)
            Jp = energies(
                AugmentedPoint(pt.theta, pt.lam, Profile(g, pt.u.u + h * v)),
                nl, m,
            ).J
            Jm = energies(
                AugmentedPoint(pt.theta, pt.lam, Profile(g, pt.u.u - h * v)),
                nl, m,
            ).J
            errs["u"][lvl].append((Jp - Jm) / (2 * h) - du_exact)
    for slot, (e_h, e_h2) in errs.items():
        rms_h = float(np.sqrt(np.mean(np.square(e_h))))
        rms_h2 = float(np.sqrt(np.mean(np.square(e_h2))))
        order = math.log2(rms_h / rms_h2)
        assert order >= 1.9, f"{slot}-slot observed order {order:.3f}"
    assert time.monotonic() - t0 < 60.0


def test_criterion_03_soliton_fixture_dimension_one():
    t0 = time.monotonic()
    samp = find_bound_state(PurePower(3, N=1), 0.0)
    assert abs(samp.amplitude - math.sqrt(2.0)) <= 1e-6
    assert abs(samp.Ihat - 4.0 / 3.0) <= 1e-6 * (4.0 / 3.0)
    assert time.monotonic() - t0 < 5.0


def test_criterion_04_pure_power_scaling_laws():
    t0 = time.monotonic()
    # subcritical quadratic: energy exponent (q+1)/(q-1) - N/2 = 2,
    # mass exponent 1
    base = find_bound_state(QUAD, 0.0, n=GRID_N, r0=GRID_R0)
    for lam in (-1.0, 1.0):
        s = find_bound_state(QUAD, lam, n=GRID_N, r0=GRID_R0)
        assert abs(s.Ihat / (base.Ihat * math.exp(2.0 * lam)) - 1) <= 1e-4
        assert abs(s.mass / (base.mass * math.exp(lam)) - 1) <= 1e-4
    # at the mass-critical power the branch mass is multiplier-invariant
    m_lo = find_bound_state(CRIT, -1.0, n=GRID_N, r0=GRID_R0).mass
    m_hi = find_bound_state(CRIT, 1.0, n=GRID_N, r0=GRID_R0).mass
    assert abs(m_hi / m_lo - 1.0) < 1e-4
    assert time.monotonic() - t0 < 60.0


def test_criterion_05_residuals_bounded_on_every_accepted_solution():
    # scaled dilation-identity and pairing-identity residuals stay below
    # 1e-6 on every accepted output across methods and nonlinearities
    sols = [
        find_bound_state(QUAD, lam, n=GRID_N, r0=GRID_R0)
        for lam in (-2.0, -1.0, 0.0, 0.5)
    ]
    sols += [
        find_bound_state(SAT, lam, n=GRID_N, r0=GRID_R0)
        for lam in (-3.0, -1.0)
    ]
    sols += [find_bound_state(QUAD, -1.0, nodes=k, n=GRID_N, r0=GRID_R0)
             for k in (1, 2)]
    for s in sols:
        assert abs(s.pohozaev_residual) <= 1e-6
        assert abs(s.nehari_residual) <= 1e-6
    rep = solve_normalized(
        QUAD, 15.0, "BranchRootFind", window=(-2.0, 0.0), samples=3,
        n=513, r0=12.0,
    )
    assert rep.status == "ok"
    assert abs(rep.residuals.pohozaev) <= 1e-6 * (1.0 + abs(rep.F))
    sph = minimize_on_sphere(QUAD, 15.0, n=513, r0=12.0)
    assert sph.status == "ok"
    assert abs(sph.residuals.pohozaev) <= 1e-6 * (1.0 + abs(sph.F))


def test_criterion_06_mountain_pass_routes_agree_within_one_percent():
    t0 = time.monotonic()
    for lam in (0.0, -1.0):
        by_state = mp_level_least_energy(QUAD, lam, n=GRID_N, r0=GRID_R0)
        by_path = mp_level_path(QUAD, lam, rtol=1e-3)
        assert by_path.converged
        gap = abs(by_path.level - by_state) / abs(by_state)
        assert gap <= 0.01, f"lam={lam}: relative gap {gap:.2e}"
    assert time.monotonic() - t0 < 300.0


def test_criterion_07_critical_mass_and_flat_threshold_ratio():
    t0 = time.monotonic()
    curve = threshold_curve(
        CRIT, 0, window=(-2.0, 1.0), samples=7, n=GRID_N, r0=GRID_R0,
        threads=2,
    )
    assert not curve.gaps
    # the threshold mass equals the squared norm of the lambda=0 state
    q_mass = find_bound_state(CRIT, 0.0, n=GRID_N, r0=GRID_R0).mass
    assert abs(curve.m_k - q_mass) <= 5e-3 * q_mass
    ratios = [row[2] for row in curve.samples]
    assert max(ratios) / min(ratios) - 1.0 <= 1e-3
    assert time.monotonic() - t0 < 120.0


def test_criterion_08_constrained_level_matches_lagrange_route():
    t0 = time.monotonic()
    for m in (62.00634530116305, 40.0):
        sphere = minimize_on_sphere(QUAD, m, n=GRID_N, r0=GRID_R0)
        lagrange = solve_normalized(
            QUAD, m, "BranchRootFind", window=(-4.0, 1.5), samples=7,
            n=GRID_N, r0=GRID_R0,
        )
        assert sphere.status == "ok" and lagrange.status == "ok"
        assert sphere.mu > 0 and lagrange.mu > 0
        gap = abs(sphere.I - lagrange.I) / abs(sphere.I)
        assert gap <= 0.01, f"m={m}: relative gap {gap:.2e}"
    assert time.monotonic() - t0 < 600.0


def test_criterion_09_threshold_dichotomy_straddling_grid():
    t0 = time.monotonic()
    curve = threshold_curve(
        SAT, 0, window=(-5.0, -0.3), samples=9, n=GRID_N, r0=GRID_R0,
        threads=2,
    )
    m0 = curve.m_k
    for factor in (0.70, 0.85, 1.15, 1.35, 1.60):
        rep = minimize_on_sphere(SAT, factor * m0, n=GRID_N, r0=GRID_R0)
        if factor < 1.0:
            # subcritical side: zero infimum, not attained
            assert rep.status == "zero-suspected", (
                f"m/m0={factor}: {rep.status}, I={rep.I:.3e}"
            )
        else:
            assert rep.status == "ok", f"m/m0={factor}: {rep.status}"
            assert rep.I < 0.0
    assert time.monotonic() - t0 < 900.0


def test_criterion_10_flow_monotone_banded_and_equivariant():
    t0 = time.monotonic()
    m = 62.00634530116305
    lam_star = math.log(2.0)
    state = find_bound_state(QUAD, lam_star, nodes=0, n=641, r0=14.0)
    g = state.profile.grid
    rng = np.random.default_rng(10)
    eps_bar = 0.5
    for trial in range(20):
        bump = rng.uniform(0.05, 0.3) * np.exp(
            -((g.r - rng.uniform(0.0, 3.0)) ** 2) / rng.uniform(0.5, 2.0)
        )
        u = state.profile.u * rng.uniform(0.9, 1.1) + bump
        pt = AugmentedPoint(
            rng.uniform(-0.05, 0.05),
            lam_star + rng.uniform(-0.1, 0.1),
            Profile(g, u),
        )
        J0 = energies(pt, QUAD, m).J
        assert J0 < 0.0
        if trial % 4 == 3:
            # start below the band: the flow must be the identity
            b = J0 + 1.5 * eps_bar
            res = deform(pt, QUAD, m, b=b, eps_bar=eps_bar, radius=2.0,
                         max_steps=60)
            assert res.reason == "left-band"
            assert res.steps == 0
            assert np.array_equal(res.point.u.u, u)
            continue
        b = J0 - 0.25 * eps_bar  # start inside the half band
        res = deform(pt, QUAD, m, b=b, eps_bar=eps_bar, radius=2.0,
                     max_steps=60)
        J_vals = np.array(res.J_values)
        drops = np.diff(J_vals)
        assert np.all(drops <= 1e-12 * (1.0 + np.abs(J_vals[:-1])))
        if res.reason == "left-band":
            assert J_vals[-1] <= b - eps_bar + 1e-9
        if trial % 5 == 0:
            mirror = AugmentedPoint(pt.theta, pt.lam, Profile(g, -u))
            res_m = deform(mirror, QUAD, m, b=b, eps_bar=eps_bar,
                           radius=2.0, max_steps=60)
            # odd equivariance to machine precision: bitwise mirrored
            assert np.array_equal(res_m.point.u.u, -res.point.u.u)
            assert res_m.trace == res.trace
    assert time.monotonic() - t0 < 300.0


def test_criterion_11_strict_subadditivity_with_margin():
    t0 = time.monotonic()
    m = 62.00634530116305
    whole = minimize_on_sphere(QUAD, m, n=GRID_N, r0=GRID_R0)
    half = minimize_on_sphere(QUAD, 0.5 * m, n=GRID_N, r0=GRID_R0)
    assert whole.status == "ok" and half.status == "ok"
    energy_tol = 1e-6 * (1.0 + abs(whole.I))
    margin = 2.0 * half.I - whole.I
    assert margin > 10.0 * energy_tol, (
        f"margin {margin:.3e} vs 10*tol {10 * energy_tol:.3e}"
    )
    assert time.monotonic() - t0 < 600.0


def test_criterion_12_noncompact_vanishing_sequence_flagged():
    t0 = time.monotonic()
    m = 3.0
    g = make_grid(2, 10.0, 201)
    zero = Profile(g, np.zeros(g.n))
    points = [(-float(k), zero) for k in range(1, 21)]
    res = [psp_residual(lam, u, QUAD, m) for lam, u in points]
    for k, r in enumerate(res, start=1):
        expected = 0.5 * m * math.exp(-float(k))
        assert abs(r.total() - expected) <= 1e-12 * expected
        assert abs(r.level + expected) <= 1e-12 * expected
    totals = [r.total() for r in res]
    assert all(b < a for a, b in zip(totals, totals[1:]))
    assert abs(res[-1].level) < 1e-8
    diag = diagnose_psp_sequence(points, QUAD, m)
    assert diag["residuals_vanish"]
    assert diag["compact"] == "no"
    assert "no convergent subsequence" in diag["note"]
    assert time.monotonic() - t0 < 1.0
