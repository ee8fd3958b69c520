"""Radial grids: quadrature, differentiation, dilation, persistence."""

import math

import numpy as np
import pytest

from normfield.errors import TruncationError
from normfield.grid import (
    Profile,
    RadialGrid,
    dilate,
    grid_for_mu,
    load_profile,
    make_grid,
    norm,
    save_profile,
    sphere_area,
)


def ball_volume(N, R):
    return math.pi ** (N / 2) / math.gamma(N / 2 + 1) * R**N


def test_sphere_area_values():
    assert abs(sphere_area(1) - 2.0) < 1e-15
    assert abs(sphere_area(2) - 2 * math.pi) < 1e-15
    assert abs(sphere_area(3) - 4 * math.pi) < 1e-14


@pytest.mark.parametrize("N", [1, 2, 3])
@pytest.mark.parametrize("Rmax", [1.0, 10.0, 40.0])
@pytest.mark.parametrize("n", [16, 256, 2048])
def test_quadrature_integrates_constants_exactly(N, Rmax, n):
    g = make_grid(N, Rmax, n)
    vol = float(np.sum(g.w * g.sigma))
    assert abs(vol - ball_volume(N, Rmax)) < 1e-10 * ball_volume(N, Rmax)


@pytest.mark.parametrize("N", [1, 2, 3, 4])
@pytest.mark.parametrize("n", [16, 33, 101, 512, 2051])
def test_weights_nonnegative(N, n):
    g = make_grid(N, 12.0, n)
    assert np.all(g.w >= 0.0)
    assert g.quad_degree >= 1


@pytest.mark.parametrize("N", [1, 2, 3])
def test_gaussian_norms(N):
    # closed form: int exp(-r^2) over R^N = pi^(N/2); u = exp(-r^2/2)
    g = make_grid(N, 16.0, 1026)
    u = np.exp(-g.r**2 / 2.0)
    p = Profile(g, u)
    mass = norm(p, "L2") ** 2
    assert abs(mass - math.pi ** (N / 2)) < 1e-10 * math.pi ** (N / 2)
    # |grad u|^2 = r^2 exp(-r^2): integral is (N/2) pi^(N/2)
    grad = norm(p, "GradL2") ** 2
    assert abs(grad - (N / 2) * math.pi ** (N / 2)) < 1e-8
    cubed = norm(p, "Lr", exponent=3.0) ** 3
    assert abs(cubed - (2 * math.pi / 3) ** (N / 2)) < 1e-9
    h1 = norm(p, "H1") ** 2
    assert abs(h1 - (mass + grad)) < 1e-12 * h1


def test_convergence_order_of_quadrature():
    # smooth bump with algebraic decay fast enough to ignore the boundary
    N = 2
    exact = math.pi ** (N / 2)  # reuse the Gaussian mass
    errs = []
    ns = [64, 128, 256, 512]
    for n in ns:
        g = make_grid(N, 14.0, n)
        u = np.exp(-g.r**2 / 2.0)
        errs.append(abs(float(np.sum(g.w * g.sigma * u**2)) - exact))
    rates = [math.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)
             if errs[i + 1] > 1e-15]
    assert rates and min(rates) > 3.0


def test_derivative_matrix_accuracy():
    g = make_grid(3, 10.0, 801)
    u = np.exp(-g.r**2 / 2.0)
    du = g.D1 @ u
    assert np.allclose(du, -g.r * u, atol=1e-9)
    d2u = g.D2 @ u
    assert np.allclose(d2u, (g.r**2 - 1.0) * u, atol=1e-7)


def test_laplacian_row_at_origin():
    # radial laplacian of exp(-r^2/2) is (r^2 - N) exp(-r^2/2)
    for N in (1, 2, 3):
        g = make_grid(N, 10.0, 641)
        u = np.exp(-g.r**2 / 2.0)
        lap = g.lap_matrix() @ u
        assert abs(lap[0] + N) < 1e-6
        assert np.allclose(lap[:50], (g.r[:50] ** 2 - N) * u[:50], atol=1e-6)


def test_stiffness_matches_gradient_norm():
    # two independent discretizations of the same integral: the exact
    # element-wise Galerkin form and the FD-derivative quadrature
    g = make_grid(2, 16.0, 1026)
    u = np.exp(-g.r**2 / 2.0)
    quadratic = float(u @ (g.stiffness @ u))
    du = g.derivative(u)
    by_quadrature = g.integrate(du * du)
    assert abs(quadratic - by_quadrature) < 1e-8
    assert abs(quadratic - norm(Profile(g, u), "GradL2") ** 2) < 1e-12


def test_stiffness_exact_on_piecewise_polynomials():
    # within one 5-interval cell the nodal space contains every quintic, so
    # u = r^3 restricted to cell polynomials is reproduced and u^T K u must
    # equal the analytic gradient energy to rounding
    N = 2
    g = make_grid(N, 4.0, 41)
    u = g.r**3
    exact = g.sigma * 9.0 / (4 + N) * g.Rmax ** (4 + N)  # int (3r^2)^2 r^(N-1)
    got = float(u @ (g.stiffness @ u))
    assert abs(got - exact) < 1e-11 * exact


def test_stiffness_spd():
    g = make_grid(3, 10.0, 256)
    K = g.stiffness
    asym = abs(K - K.T)
    assert asym.max() == 0.0
    rng = np.random.default_rng(5)
    for _ in range(5):
        v = rng.standard_normal(g.r.size)
        val = float(v @ (K @ v))
        assert val >= 0.0
        assert val > 1e-8 * float(v @ v)  # only constants are in the kernel
    ones = np.ones(g.r.size)
    assert abs(float(ones @ (K @ ones))) < 1e-9


def test_h1_solver_inverts_operator():
    g = make_grid(2, 16.0, 1026)
    rng = np.random.default_rng(11)
    b = rng.standard_normal(g.r.size) * np.exp(-g.r / 2.0)
    for gc, mc in [(1.0, 1.0), (0.25, 3.0)]:
        x = g.h1_solver(gc, mc)(b)
        res = gc * (g.stiffness @ x) + mc * g.mass_diag * x - b
        assert np.linalg.norm(res) < 1e-9 * max(1.0, np.linalg.norm(b))


def test_dilate_mass_scaling():
    # mass of u(r e^-theta) is e^(N theta) times the mass of u
    N = 2
    g = make_grid(N, 20.0, 1026)
    u = np.exp(-g.r**2 / 2.0)
    p = Profile(g, u)
    theta = 0.35
    q = dilate(p, theta)
    ratio = norm(q, "L2") ** 2 / norm(p, "L2") ** 2
    assert abs(ratio - math.exp(N * theta)) < 1e-6


def test_dilate_composes():
    g = make_grid(2, 24.0, 1026)
    u = np.exp(-g.r**2 / 2.0)
    p = Profile(g, u)
    two_steps = dilate(dilate(p, 0.2), 0.15)
    one_step = dilate(p, 0.35)
    assert np.allclose(two_steps.u, one_step.u, atol=1e-9)


def test_dilate_truncation_raises():
    g = make_grid(2, 10.0, 301)
    u = np.exp(-((g.r - 8.0) ** 2))  # bump near the boundary
    with pytest.raises(TruncationError) as err:
        dilate(Profile(g, u), 1.0)
    assert err.value.lost_mass is None or err.value.lost_mass >= 0.0


def test_grid_for_mu_scales_radius():
    g1 = grid_for_mu(2, 1.0, 501)
    g4 = grid_for_mu(2, 4.0, 501)
    assert abs(g1.Rmax / g4.Rmax - 2.0) < 1e-12


def test_grid_validation():
    with pytest.raises(ValueError):
        RadialGrid(2, np.array([0.1, 0.2, 0.3]))  # must start at 0
    with pytest.raises(ValueError):
        RadialGrid(2, np.linspace(1.0, 0.0, 20))  # must increase
    with pytest.raises(ValueError):
        RadialGrid(0, np.linspace(0.0, 1.0, 20))  # dimension >= 1
    with pytest.raises(ValueError):
        make_grid(2, -1.0, 100)


def test_node_count_is_rounded_to_cells():
    g = make_grid(2, 10.0, 100)
    assert (g.r.size - 1) % 5 == 0


def test_save_load_roundtrip(tmp_path):
    g = make_grid(2, 16.0, 516)
    u = np.exp(-g.r**2 / 2.0) * (1.0 + 0.1 * np.cos(g.r))
    path = tmp_path / "profile.txt"
    save_profile(Profile(g, u), path)
    back = load_profile(path, g)
    assert np.allclose(back.u, u, rtol=1e-12, atol=1e-15)
    # resampling onto a different grid stays accurate
    g2 = make_grid(2, 16.0, 301)
    back2 = load_profile(path, g2)
    assert np.allclose(back2.u, np.exp(-g2.r**2 / 2.0) * (1.0 + 0.1 * np.cos(g2.r)),
                       atol=1e-6)


def test_norm_rejects_unknown_kind():
    g = make_grid(2, 10.0, 101)
    with pytest.raises(ValueError):
        norm(Profile(g, np.zeros(g.r.size)), "L3")
