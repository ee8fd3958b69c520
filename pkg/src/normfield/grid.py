"""Radial meshes, quadrature and differentiation on [0, Rmax].

All integrals are over R^N for radially symmetric integrands,
int f = sigma_N * int_0^Rmax f(r) r^(N-1) dr, with sigma_N the surface area of
the unit sphere. Quadrature weights are moment-matched per cell of five
intervals (degree-5 interpolatory) with a positivity cascade: if a cell rule
goes negative, leading nodes are dropped (the r^(N-1) measure degenerates at
the origin, so for N >= 3 the r=0 node legitimately carries zero weight),
falling back to exact-moment trapezoid weights which are positive for any
positive measure. The grid reports the worst per-cell exactness degree as
``quad_degree``.

Derivatives use 7-point finite-difference stencils with arbitrary-node weights
and an even-symmetry mirror closure at r=0 (radial profiles are even).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import PchipInterpolator
from scipy.linalg import cholesky_banded, cho_solve_banded

from .errors import TruncationError

__all__ = [
    "RadialGrid",
    "Profile",
    "make_grid",
    "grid_for_mu",
    "norm",
    "dilate",
    "save_profile",
    "load_profile",
    "sphere_area",
]

CELL = 5          # intervals per quadrature cell
FD_POINTS = 7     # nodes per derivative stencil
DEFAULT_N_NODES = 2051
DEFAULT_GRADING = 2.5
DEFAULT_R0 = 18.0


def sphere_area(N: int) -> float:
    """Surface area of the unit sphere in R^N (2, 2*pi, 4*pi, ...)."""
    return 2.0 * math.pi ** (N / 2.0) / math.gamma(N / 2.0)


# ---------------------------------------------------------------------------
# quadrature weights


def _cell_moments(nodes, a, b, N):
    """Moments int_a^b (r - c)^k r^(N-1) dr for k < len(nodes), c = (a+b)/2."""
    c = 0.5 * (a + b)
    d = len(nodes)
    M = np.empty(d)
    for k in range(d):
        tot = 0.0
        for j in range(N):
            binom = math.comb(N - 1, j) * c ** (N - 1 - j)
            pw = k + j + 1
            tot += binom * ((b - c) ** pw - (a - c) ** pw) / pw
        M[k] = tot
    return M, c


def _interp_weights(nodes, a, b, N):
    M, c = _cell_moments(nodes, a, b, N)
    V = np.vander(nodes - c, len(nodes), increasing=True).T
    return np.linalg.solve(V, M)


def _trapezoid_weights(nodes, N):
    w = np.zeros(len(nodes))
    for i in range(len(nodes) - 1):
        a, b = nodes[i], nodes[i + 1]
        p0 = (b**N - a**N) / N
        p1 = (b ** (N + 1) - a ** (N + 1)) / (N + 1)
        w[i] += (b * p0 - p1) / (b - a)
        w[i + 1] += (p1 - a * p0) / (b - a)
    return w


def _cell_rule(nodes, N):
    """Nonnegative interpolatory weights for one cell; returns (w, degree)."""
    a, b = nodes[0], nodes[-1]
    d = len(nodes)
    for k in range(d - 1):
        w = np.zeros(d)
        w[k:] = _interp_weights(nodes[k:], a, b, N)
        if w.min() >= 0.0:
            return w, d - 1 - k
    return _trapezoid_weights(nodes, N), 1


def _quad_weights(r, N):
    n = len(r)
    w = np.zeros(n)
    degree = n  # min-reduced below
    i = 0
    while i < n - 1:
        j = min(i + CELL, n - 1)
        cw, deg = _cell_rule(r[i : j + 1], N)
        w[i : j + 1] += cw
        degree = min(degree, deg)
        i = j
    return w, degree


# ---------------------------------------------------------------------------
# differentiation


def _fd_weights(x, x0, m):
    """Weights for the m-th derivative at x0 from arbitrary nodes x
    (the standard recursive construction)."""
    n = len(x)
    c = np.zeros((n, m + 1))
    c1, c4 = 1.0, x[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2, c5, c4 = 1.0, c4, x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m]


def _deriv_matrix(r, order):
    """Sparse differentiation matrix with mirror closure at r=0."""
    n = len(r)
    half = FD_POINTS // 2
    rows, cols, vals = [], [], []
    for i in range(n):
        if i < half:
            # reflect nodes through the origin; even symmetry folds the
            # mirrored columns back onto their positive counterparts
            xs = np.concatenate([-r[half - i : 0 : -1], r[: FD_POINTS - half + i]])
            cc = np.concatenate(
                [np.arange(half - i, 0, -1), np.arange(0, FD_POINTS - half + i)]
            )
        else:
            lo = min(i - half, n - FD_POINTS)
            xs = r[lo : lo + FD_POINTS]
            cc = np.arange(lo, lo + FD_POINTS)
        wts = _fd_weights(xs, r[i], order)
        rows.extend([i] * len(cc))
        cols.extend(cc.tolist())
        vals.extend(wts.tolist())
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def _sem_stiffness(r, N, sigma):
    """Exact Galerkin stiffness of the piecewise degree-5 nodal space.

    Per quadrature cell the integrand phi_a' phi_b' r^(N-1) is a polynomial,
    integrated exactly by 8-point Gauss, so u^T K v is the exact gradient
    pairing of the nodal interpolants (no variational crime, SPD)."""
    from numpy.polynomial.legendre import leggauss

    n = len(r)
    xg, wg = leggauss(8)
    rows, cols, vals = [], [], []
    i = 0
    while i < n - 1:
        j = min(i + CELL, n - 1)
        nodes = r[i : j + 1]
        m = len(nodes)
        a, b = nodes[0], nodes[-1]
        c, hs = 0.5 * (a + b), 0.5 * (b - a)
        t = (nodes - c) / hs
        coef = np.linalg.inv(np.vander(t, m, increasing=True))
        dcoef = coef[1:, :] * np.arange(1, m)[:, None]
        dphi = (np.vander(xg, m - 1, increasing=True) @ dcoef) / hs
        rg = c + hs * xg
        meas = (wg * hs) * rg ** (N - 1) * sigma
        S = dphi.T @ (meas[:, None] * dphi)
        idx = np.arange(i, j + 1)
        rows.extend(np.repeat(idx, m).tolist())
        cols.extend(np.tile(idx, m).tolist())
        vals.extend(S.ravel().tolist())
        i = j
    K = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return ((K + K.T) * 0.5).tocsr()


def _to_banded_upper(A):
    """Symmetric sparse matrix to upper-banded storage for solveh_banded."""
    A = A.tocoo()
    bw = int(np.max(np.abs(A.row - A.col)))
    n = A.shape[0]
    ab = np.zeros((bw + 1, n))
    for i, j, v in zip(A.row, A.col, A.data):
        if j >= i:
            ab[bw - (j - i), j] += v
    return ab


# ---------------------------------------------------------------------------
# grid and profile types


class RadialGrid:
    """Nodes, quadrature weights and differentiation for radial functions.

    Attributes
    ----------
    N : ambient dimension (integer >= 1)
    r : nodes, r[0] = 0, strictly increasing to Rmax
    w : nonnegative quadrature weights against the measure r^(N-1) dr
    quad_degree : minimum per-cell polynomial exactness degree
    """

    def __init__(self, N, r, w=None, quad_degree=None):
        r = np.asarray(r, dtype=float)
        if r.ndim != 1 or r.size < 16:
            raise ValueError("need at least 16 nodes")
        if r[0] != 0.0 or not np.all(np.diff(r) > 0):
            raise ValueError("nodes must start at 0 and increase strictly")
        if not (isinstance(N, (int, np.integer)) and N >= 1):
            raise ValueError("dimension N must be an integer >= 1")
        self.N = int(N)
        self.r = r
        if w is None:
            w, quad_degree = _quad_weights(r, self.N)
        else:
            w = np.asarray(w, dtype=float)
        if w.shape != r.shape:
            raise ValueError("weights must align with nodes")
        if w.min() < 0.0:
            raise ValueError("quadrature weights must be nonnegative")
        self.w = w
        self.quad_degree = quad_degree
        self.Rmax = float(r[-1])
        self.sigma = sphere_area(self.N)
        self._cache = {}

    @property
    def n(self):
        return len(self.r)

    def integrate(self, values):
        """sigma_N * int values(r) r^(N-1) dr by the grid rule."""
        return self.sigma * float(np.dot(self.w, values))

    # --- differentiation ---------------------------------------------------

    @property
    def D1(self):
        if "D1" not in self._cache:
            self._cache["D1"] = _deriv_matrix(self.r, 1)
        return self._cache["D1"]

    @property
    def D2(self):
        if "D2" not in self._cache:
            self._cache["D2"] = _deriv_matrix(self.r, 2)
        return self._cache["D2"]

    def derivative(self, u):
        return self.D1 @ u

    def lap_matrix(self):
        """Radial Laplacian u'' + ((N-1)/r) u'; at r=0 the limit N*u''(0)."""
        if "lap" not in self._cache:
            inv_r = np.zeros(self.n)
            inv_r[1:] = (self.N - 1) / self.r[1:]
            L = self.D2 + sp.diags(inv_r) @ self.D1
            L = L.tolil()
            L[0, :] = self.N * self.D2[0, :].toarray().ravel()
            self._cache["lap"] = L.tocsr()
        return self._cache["lap"]

    # --- Gram matrices and inner products ----------------------------------

    @property
    def stiffness(self):
        """K with u^T K v = int grad u . grad v (sparse, symmetric PSD)."""
        if "K" not in self._cache:
            self._cache["K"] = _sem_stiffness(self.r, self.N, self.sigma)
        return self._cache["K"]

    @property
    def mass_diag(self):
        """Diagonal of the L2 Gram matrix."""
        return self.sigma * self.w

    def l2dot(self, u, v):
        return self.sigma * float(np.dot(self.w, u * v))

    def grad_dot(self, u, v):
        return float(u @ (self.stiffness @ v))

    def h1_solver(self, grad_coef, mass_coef):
        """Factorized solver for (grad_coef*K + mass_coef*M) x = b, SPD."""
        key = ("h1", float(grad_coef), float(mass_coef))
        if key not in self._cache:
            A = grad_coef * self.stiffness + sp.diags(mass_coef * self.mass_diag)
            ab = _to_banded_upper(A)
            cb = cholesky_banded(ab, lower=False)
            self._cache[key] = cb
            # keep the cache bounded; solvers are cheap to rebuild
            if len(self._cache) > 64:
                for k in [k for k in self._cache if isinstance(k, tuple)][:32]:
                    del self._cache[k]
        cb = self._cache[key]
        return lambda b: cho_solve_banded((cb, False), b)


@dataclass
class Profile:
    """Radial function sampled on a grid, values aligned with nodes."""

    grid: RadialGrid
    u: np.ndarray

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        if self.u.shape != self.grid.r.shape:
            raise ValueError("values must align with grid nodes")

    def copy(self):
        return Profile(self.grid, self.u.copy())


# ---------------------------------------------------------------------------
# ops


def make_grid(N, Rmax, n=DEFAULT_N_NODES, grading=DEFAULT_GRADING) -> RadialGrid:
    """Graded mesh on [0, Rmax], finer near the origin.

    Uses r = Rmax * expm1(g*s)/expm1(g) over uniform s, with the grading g
    softened at small n so cells stay locally near-uniform. n is rounded up to
    a whole number of 5-interval quadrature cells (the next 5k+1).
    """
    if Rmax <= 0:
        raise ValueError("Rmax must be positive")
    n = max(int(n), 16)
    n = ((n - 2) // CELL + 1) * CELL + 1
    g_eff = grading * min(1.0, (n - 1) / 96.0)
    s = np.linspace(0.0, 1.0, n)
    if g_eff > 1e-12:
        r = Rmax * np.expm1(g_eff * s) / np.expm1(g_eff)
    else:
        r = Rmax * s
    r[0], r[-1] = 0.0, Rmax
    return RadialGrid(N, r)


def grid_for_mu(N, mu, n=DEFAULT_N_NODES, r0=DEFAULT_R0, grading=DEFAULT_GRADING):
    """Grid whose radius tracks the linear decay length 1/sqrt(mu)."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    return make_grid(N, r0 / math.sqrt(mu), n=n, grading=grading)


def norm(profile: Profile, kind: str = "L2", exponent: float | None = None) -> float:
    """Norms over R^N: 'L2', 'GradL2', 'Lr' (needs exponent), 'H1'."""
    g, u = profile.grid, profile.u
    if kind == "L2":
        return math.sqrt(g.integrate(u * u))
    if kind == "GradL2":
        return math.sqrt(max(g.grad_dot(u, u), 0.0))
    if kind == "Lr":
        if exponent is None or exponent < 1:
            raise ValueError("kind 'Lr' needs an exponent >= 1")
        return g.integrate(np.abs(u) ** exponent) ** (1.0 / exponent)
    if kind == "H1":
        return math.sqrt(g.integrate(u * u) + max(g.grad_dot(u, u), 0.0))
    raise ValueError(f"unknown norm kind {kind!r}")


def _support_radius(profile, rel_tol=1e-13):
    u, r = profile.u, profile.grid.r
    amax = np.max(np.abs(u))
    if amax == 0.0:
        return 0.0
    idx = np.nonzero(np.abs(u) > rel_tol * amax)[0]
    return float(r[idx[-1]]) if idx.size else 0.0


def dilate(profile: Profile, theta: float) -> Profile:
    """v(r) = u(r * e^(-theta)), evaluated by monotone cubic interpolation.

    Spreads the profile for theta > 0 (so that ||v||_2^2 = e^(N*theta)
    ||u||_2^2 up to interpolation error). Raises TruncationError when the
    support of u would be pushed past Rmax.
    """
    g = profile.grid
    if theta == 0.0:
        return profile.copy()
    scale = math.exp(-theta)
    support = _support_radius(profile)
    if support * math.exp(theta) > g.Rmax * (1.0 + 1e-12):
        itp = PchipInterpolator(g.r, profile.u, extrapolate=False)
        args = np.clip(g.r * scale, 0.0, g.Rmax)
        v = itp(args)
        kept = g.integrate(v * v)
        full = math.exp(g.N * theta) * g.integrate(profile.u**2)
        raise TruncationError(
            f"dilation by theta={theta:g} pushes support {support:g} past "
            f"Rmax={g.Rmax:g}",
            lost_mass=max(full - kept, 0.0),
        )
    itp = PchipInterpolator(g.r, profile.u, extrapolate=False)
    args = g.r * scale
    v = np.where(args <= g.Rmax, itp(np.minimum(args, g.Rmax)), 0.0)
    return Profile(g, np.nan_to_num(v, nan=0.0))


def save_profile(profile: Profile, path) -> None:
    """Two-column (r, u) text export."""
    data = np.column_stack([profile.grid.r, profile.u])
    np.savetxt(path, data, fmt="%.17g", header="r u")


def load_profile(path, grid: RadialGrid) -> Profile:
    """Load a two-column (r, u) file and resample it onto the given grid."""
    data = np.loadtxt(path)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ValueError(f"{path}: expected two columns (r, u)")
    r, u = data[:, 0], data[:, 1]
    if not np.all(np.diff(r) > 0):
        raise ValueError(f"{path}: radii must be strictly increasing")
    itp = PchipInterpolator(r, u, extrapolate=False)
    vals = itp(np.clip(grid.r, r[0], r[-1]))
    vals = np.nan_to_num(vals, nan=0.0)
    vals[grid.r > r[-1]] = 0.0
    return Profile(grid, vals)
