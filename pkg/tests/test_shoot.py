"""Shooting solver: classification, thresholds, bound states, branches."""

import math

import numpy as np
import pytest

from normfield.energy import AugmentedPoint, energies
from normfield.errors import ConvergenceError
from normfield.grid import Profile, make_grid, norm
from normfield.nonlin import CombinedPower, PurePower, Saturating
from normfield.shoot import (
    BranchSample,
    amplitude,
    branch,
    count_nodes,
    find_bound_state,
    least_energy_E0,
    min_crossing_amplitude,
    polish,
    shoot,
)

BLOWUP_MODEL = CombinedPower([(1.0, 3.0), (-0.05, 5.0)], N=2)


# ---------------------------------------------------------------------------
# crossing threshold amplitude


def test_min_crossing_amplitude_pure_power():
    # closed form ((q+1) e^lam / 2)^(1/(q-1))
    for q, lam in [(3.0, 0.0), (3.0, -2.0), (2.0, -0.7)]:
        nl = PurePower(q=q, N=2)
        expect = ((q + 1) * math.exp(lam) / 2.0) ** (1.0 / (q - 1.0))
        assert min_crossing_amplitude(nl, lam) == pytest.approx(expect, rel=1e-12)


def test_min_crossing_amplitude_guard():
    # saturating potential never beats e^lam xi^2/2 once lam >= its bound
    with pytest.raises(ValueError):
        min_crossing_amplitude(Saturating(q=3, s=2, N=2), 0.1)
    # but admissible below it
    assert min_crossing_amplitude(Saturating(q=3, s=2, N=2), -1.0) > 0


# ---------------------------------------------------------------------------
# shot classification


def test_shot_small_amplitude_is_trapped():
    out = shoot(PurePower(q=3, N=2), 0.0, 0.5)
    assert out.kind == "undetermined"
    assert out.reason == "trapped"
    assert out.node_count == 0
    assert out.exit_radius == 0.0  # decided without integrating


def test_shot_mid_amplitude_trapped_after_motion():
    out = shoot(PurePower(q=3, N=2), 0.0, 2.0)
    assert out.reason == "trapped"
    assert out.node_count == 0
    assert out.exit_radius > 0.0


def test_shot_large_amplitude_crosses():
    out = shoot(PurePower(q=3, N=2), 0.0, 4.0)
    assert out.node_count >= 1


def test_shot_beyond_barrier_blows_up():
    out = shoot(BLOWUP_MODEL, 0.0, 20.0)
    assert out.kind == "blowup"
    assert out.sign == 1
    assert out.node_count == 0


def test_shot_near_threshold_tracks_decay():
    nl = PurePower(q=3, N=2)
    s = amplitude(nl, 0.0)
    out = shoot(nl, 0.0, s)
    assert out.kind == "decay"
    assert out.node_count <= 1


# ---------------------------------------------------------------------------
# exact fixtures


def test_cubic_line_soliton():
    # -u'' + u = u^3 on the line: u = sqrt(2) sech r
    samp = find_bound_state(PurePower(q=3, N=1), 0.0)
    assert samp.amplitude == pytest.approx(math.sqrt(2.0), abs=1e-10)
    assert samp.mass == pytest.approx(4.0, abs=1e-8)
    assert samp.Ihat == pytest.approx(4.0 / 3.0, abs=1e-10)
    assert abs(samp.pohozaev_residual) < 1e-8
    assert abs(samp.nehari_residual) < 1e-8
    # profile matches sqrt(2) sech r pointwise
    g = samp.profile.grid
    assert np.allclose(samp.profile.u, math.sqrt(2.0) / np.cosh(g.r), atol=1e-7)


def test_quintic_line_least_energy():
    # critical power on the line: mass sqrt(3) pi / 2, energy half of it
    E0 = least_energy_E0(1)
    assert E0 == pytest.approx(math.sqrt(3.0) * math.pi / 4.0, abs=1e-10)
    samp = find_bound_state(PurePower(q=5, N=1), 0.0)
    assert samp.amplitude == pytest.approx(3.0**0.25, abs=1e-8)
    assert samp.mass == pytest.approx(math.sqrt(3.0) * math.pi / 2.0, abs=1e-8)


def test_planar_critical_mass():
    # ground state of the cubic equation in the plane
    samp = find_bound_state(PurePower(q=3, N=2), 0.0)
    assert samp.mass == pytest.approx(11.7009, rel=2e-5)
    assert samp.amplitude == pytest.approx(2.20620, rel=2e-5)
    # least energy equals half the squared mass
    assert samp.Ihat - samp.mass / 2.0 == pytest.approx(0.0, abs=1e-8)


def test_quadratic_planar_virial_ratio():
    # q=2, N=2 at lam=0: the two integral identities force Ihat = mass/4
    samp = find_bound_state(PurePower(q=2, N=2), 0.0)
    assert samp.Ihat == pytest.approx(samp.mass / 4.0, rel=1e-9)


# ---------------------------------------------------------------------------
# scaling in the multiplier


def test_subcritical_scaling_laws():
    # q=2, N=2: energy scales like e^(2 lam), mass like e^lam
    states = {lam: find_bound_state(PurePower(q=2, N=2), lam)
              for lam in (-1.0, 0.0, 1.0)}
    for lam in (-1.0, 1.0):
        rE = states[lam].Ihat / states[0.0].Ihat
        rM = states[lam].mass / states[0.0].mass
        assert rE == pytest.approx(math.exp(2 * lam), rel=1e-9)
        assert rM == pytest.approx(math.exp(lam), rel=1e-9)


def test_critical_mass_is_multiplier_independent():
    states = [find_bound_state(PurePower(q=3, N=2), lam) for lam in (-1.0, 0.5)]
    base = find_bound_state(PurePower(q=3, N=2), 0.0)
    for s in states:
        assert s.mass / base.mass == pytest.approx(1.0, abs=1e-9)


# ---------------------------------------------------------------------------
# excited states and branches


def test_node_counts_and_energy_ordering():
    nl = PurePower(q=2, N=2)
    states = [find_bound_state(nl, 0.0, nodes=k) for k in (0, 1, 2)]
    assert [s.nodes for s in states] == [0, 1, 2]
    assert states[0].Ihat < states[1].Ihat < states[2].Ihat
    assert states[0].amplitude < states[1].amplitude < states[2].amplitude
    for s in states:
        assert abs(s.pohozaev_residual) <= 1e-6 * (1 + abs(s.Ihat))


def test_no_highly_excited_state_for_defocusing_tail():
    with pytest.raises(ConvergenceError):
        find_bound_state(BLOWUP_MODEL, 0.0, nodes=6)


def test_saturating_state_validates():
    samp = find_bound_state(Saturating(q=3, s=2, N=2), -1.0)
    assert samp.nodes == 0
    assert samp.amplitude > 0
    h1 = norm(samp.profile, "H1") ** 2
    assert abs(samp.nehari_residual) <= 1e-6 * h1
    assert abs(samp.pohozaev_residual) <= 1e-6 * (1 + abs(samp.Ihat))


def test_branch_is_sorted_and_consistent():
    lams = [0.0, -1.0, -0.5]
    sams = branch(PurePower(q=2, N=2), lams)
    assert [s.lam for s in sams] == sorted(lams)
    assert all(s.nodes == 0 for s in sams)
    # subcritical branch: mass increases with the multiplier
    masses = [s.mass for s in sams]
    assert masses[0] < masses[1] < masses[2]
    row = sams[0].csv_row()
    assert len(row) == len(BranchSample.CSV_HEADER)


# ---------------------------------------------------------------------------
# polishing machinery


def test_polish_refines_perturbed_soliton():
    g = make_grid(1, 18.0, 2051)
    exact = math.sqrt(2.0) / np.cosh(g.r)
    rng = np.random.default_rng(2)
    rough = exact * (1.0 + 0.02 * np.exp(-g.r) * rng.standard_normal(g.r.size))
    u, rn = polish(PurePower(q=3, N=1), 0.0, rough, g)
    assert np.max(np.abs(u - exact)) < 1e-7
    assert rn < 1e-7


def test_polish_raises_on_hopeless_start():
    g = make_grid(2, 18.0, 516)
    with pytest.raises(ConvergenceError):
        polish(PurePower(q=3, N=2), 0.0, np.full(g.r.size, 1e9), g, max_iter=3)


def test_count_nodes():
    g = make_grid(1, 10.0, 101)
    assert count_nodes(np.exp(-g.r)) == 0
    assert count_nodes(np.sin(g.r + 0.1) * np.exp(-g.r / 5)) == 3
    assert count_nodes(np.zeros(5)) == 0
    # dips below the significance floor do not count
    u = np.exp(-g.r)
    u[50] = -1e-12
    assert count_nodes(u) == 0
