"""Mountain-pass levels by two independent routes, and the localized flow.

Route one evaluates the frozen-multiplier energy at the bound state found by
shooting.  Route two never sees the shooting solver: it relaxes an elastic
string of profiles joining 0 to a negative-energy endpoint (simplified
string method: capped preconditioned descent steps, free-end truncation at
an energy floor, resampling to uniform arclength every sweep) and then lets
the top node climb along the frozen string tangent until it sits on the
saddle.  Agreement of the two routes is the cross-check exposed to the test
suite.

The deformation flow integrates  d eta/dt = -phi psi V / ||V||  where V is
the exact metric gradient of J (so both pseudo-gradient inequalities hold
with equality), psi localizes to an energy band around the target level and
phi cuts the motion off at a fixed travel radius.  Steps are accepted only
if J does not increase, so monotonicity is enforced, not assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .energy import AugmentedPoint, Tangent, differential, energies
from .errors import ConvergenceError
from .grid import DEFAULT_R0, Profile, grid_for_mu
from .shoot import find_bound_state

__all__ = [
    "StringResult",
    "PseudoGradient",
    "DeformResult",
    "mp_level_least_energy",
    "mp_level_path",
    "pseudo_gradient",
    "band_cutoff",
    "radius_cutoff",
    "deform",
    "dilation_energy_profile",
]

STRING_NODES = 32
STRING_SWEEPS = 400
REPARAM_EVERY = 10
PATH_N = 641
FLOW_THETA_CAP = 0.1

FLOW_TRACE_HEADER = (
    "step",
    "theta",
    "lambda",
    "J",
    "P",
    "grad_norm",
    "psi",
    "phi",
)


def mp_level_least_energy(nl, lam: float, **kw) -> float:
    """Mountain-pass level via the least-energy bound state."""
    return find_bound_state(nl, lam, nodes=0, **kw).Ihat


@dataclass
class StringResult:
    """Outcome of the elastic-string route."""

    level: float
    sweeps: int
    converged: bool
    climb_converged: bool
    energies: np.ndarray
    nodes: list = field(repr=False)


class _Landscape:
    """Frozen-multiplier energy, gradient and metrics on one grid."""

    def __init__(self, nl, lam, grid):
        self.nl = nl
        self.mu = math.exp(lam)
        self.grid = grid
        self.K = grid.stiffness
        self.Md = grid.mass_diag
        self.wa = grid.sigma * grid.w
        self.solve = grid.h1_solver(1.0, self.mu)

    def value(self, u):
        return float(
            0.5 * (u @ (self.K @ u))
            + 0.5 * self.mu * self.wa @ (u * u)
            - self.wa @ self.nl.G(u)
        )

    def grad(self, u):
        return self.K @ u + self.Md * (self.mu * u - self.nl.g(u))

    def dot(self, a, b):
        return float(a @ (self.K @ b) + self.mu * (a @ (self.Md * b)))

    def l2dot(self, a, b):
        # cheap metric used for node distribution along the string
        return float(a @ (self.Md * b))


def _far_endpoint(land, floor=-1.0):
    """A profile with energy below floor, found on a bump lattice."""
    r = land.grid.r
    for width in (1.0, 2.0, 4.0, 8.0):
        base = np.exp(-((r / width) ** 2) / 2.0)
        for c in np.geomspace(0.25, 256.0, 41):
            u = c * base
            if land.value(u) <= floor:
                return u
    raise ConvergenceError(
        "no negative-energy endpoint on the bump lattice; "
        "the level may not have mountain-pass geometry here"
    )


def _arclengths(nodes, land):
    k = len(nodes)
    seg = np.empty(k - 1)
    for i in range(k - 1):
        d = nodes[i + 1] - nodes[i]
        seg[i] = math.sqrt(max(land.l2dot(d, d), 0.0))
    return np.concatenate([[0.0], np.cumsum(seg)])


def _reparametrize(nodes, land, count=None):
    """Resample the polyline to `count` uniform-arclength nodes."""
    k = len(nodes)
    count = count or k
    s = _arclengths(nodes, land)
    total = s[-1]
    if total <= 0:
        return nodes
    targets = np.linspace(0.0, total, count)
    out = [nodes[0]]
    j = 0
    for t in targets[1:-1]:
        while j < k - 2 and s[j + 1] < t:
            j += 1
        w = (t - s[j]) / max(s[j + 1] - s[j], 1e-300)
        out.append((1.0 - w) * nodes[j] + w * nodes[j + 1])
    out.append(nodes[-1])
    return out


def _truncate_at_floor(nodes, land, floor):
    """Free-end cut: drop everything past the first crossing below `floor`.

    The functional is unbounded below beyond the ridge, so a fixed far
    endpoint lets the downhill tail elongate without limit and starve the
    ridge of nodes. Only the barrier matters for the level, so the path is
    clipped where it first dips under the floor (linear interpolation to
    the crossing)."""
    E = [land.value(u) for u in nodes]
    for i in range(1, len(nodes)):
        if E[i] <= floor:
            if i == len(nodes) - 1:
                return nodes
            w = (E[i - 1] - floor) / max(E[i - 1] - E[i], 1e-300)
            cut = (1.0 - w) * nodes[i - 1] + w * nodes[i]
            return nodes[:i] + [cut]
    return nodes


def _parabolic_peak(s, E):
    """Vertex value of the parabola through the top node and neighbors."""
    j = int(np.argmax(E))
    if j == 0 or j == len(E) - 1:
        return float(E[j])
    x0, x1, x2 = s[j - 1] - s[j], 0.0, s[j + 1] - s[j]
    y0, y1, y2 = E[j - 1], E[j], E[j + 1]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    b = (x2**2 * (y0 - y1) + x1**2 * (y2 - y0) + x0**2 * (y1 - y2)) / denom
    if a >= 0:
        return float(y1)
    return float(y1 - b * b / (4 * a))


def _climb(land, u0, that, rtol, max_iter=80):
    """Climbing refinement: walk the top node up the (frozen) tangent and
    down every perpendicular direction until the gradient dual norm dies."""
    u = u0.copy()
    b = land.grad(u)
    rho = land.solve(b)
    merit = float(b @ rho)
    tau = 0.5
    for _ in range(max_iter):
        scale = 1.0 + abs(land.value(u))
        if merit <= (rtol * scale) ** 2:
            return u, True
        d = rho - 2.0 * land.dot(rho, that) * that
        while tau > 1e-8:
            u_new = u - tau * d
            b_new = land.grad(u_new)
            rho_new = land.solve(b_new)
            merit_new = float(b_new @ rho_new)
            if merit_new < merit:
                u, b, rho, merit = u_new, b_new, rho_new, merit_new
                tau = min(tau * 1.5, 1.0)
                break
            tau *= 0.5
        else:
            return u, False
    return u, merit <= (rtol * (1.0 + abs(land.value(u)))) ** 2


def mp_level_path(
    nl,
    lam: float,
    n: int = PATH_N,
    r0: float = DEFAULT_R0,
    nodes: int = STRING_NODES,
    sweeps: int = STRING_SWEEPS,
    rtol: float = 1e-6,
) -> StringResult:
    """Mountain-pass level by elastic-string relaxation with a climbing top
    node; independent of the shooting solver."""
    grid = grid_for_mu(nl.N, math.exp(lam), n, r0)
    land = _Landscape(nl, lam, grid)
    far = _far_endpoint(land)
    floor = 0.5 * land.value(far)
    ts = np.linspace(0.0, 1.0, nodes)
    string = [t * far for t in ts]
    level_hist = []
    done = 0
    h = 0.25
    spacing = math.sqrt(max(land.l2dot(far, far), 0.0)) / (nodes - 1)
    for sweep in range(1, sweeps + 1):
        moved = [string[0]]
        for i in range(1, nodes - 1):
            u = string[i]
            rho = land.solve(land.grad(u))
            rn = math.sqrt(max(land.l2dot(rho, rho), 0.0))
            cap = 0.3 * spacing
            step = rho * (cap / rn) if h * rn > cap > 0 else h * rho
            cand = u - step
            moved.append(cand if math.isfinite(land.value(cand)) else u)
        moved.append(string[-1])
        moved = _truncate_at_floor(moved, land, floor)
        string = _reparametrize(moved, land, nodes)
        s = _arclengths(string, land)
        spacing = float(s[-1]) / (nodes - 1)
        if sweep % REPARAM_EVERY == 0:
            E = np.array([land.value(u) for u in string])
            peak = _parabolic_peak(s, E)
            interior = 0 < int(np.argmax(E)) < nodes - 1
            level_hist.append(peak)
            if (
                interior
                and len(level_hist) >= 3
                and math.isfinite(peak)
                and abs(level_hist[-1] - level_hist[-2])
                <= 0.1 * rtol * (1.0 + abs(peak))
            ):
                done = sweep
                break
    E = np.array([land.value(u) for u in string])
    j = int(np.argmax(E))
    fit = level_hist[-1] if level_hist else float(E[j])
    climbed = False
    if 0 < j < nodes - 1:
        t = string[j + 1] - string[j - 1]
        tn = math.sqrt(max(land.dot(t, t), 0.0))
        if tn > 0:
            top, climbed = _climb(land, string[j], t / tn, rtol)
            if climbed:
                string[j] = top
                E[j] = land.value(top)
    level = float(E[j]) if climbed else fit
    return StringResult(
        level=level,
        sweeps=done or sweeps,
        converged=bool(done),
        climb_converged=climbed,
        energies=E,
        nodes=[Profile(grid, u) for u in string],
    )


# ---------------------------------------------------------------------------
# pseudo-gradient and localized deformation


@dataclass
class PseudoGradient:
    """Exact metric gradient of J with its defining certificates:
    norm_ratio = ||V|| / ||DJ||* and alignment = DJ[V] / ||DJ||*^2,
    both equal to 1 up to roundoff."""

    direction: Tangent
    dual_norm: float
    norm_ratio: float
    alignment: float


def pseudo_gradient(pt: AugmentedPoint, nl, m: float) -> PseudoGradient:
    from .energy import metric_norm

    d = differential(pt, nl, m)
    t = Tangent(d.d_theta, d.d_lambda, d.grad_u)
    if d.dual_norm == 0.0:
        return PseudoGradient(t, 0.0, 1.0, 1.0)
    mn = metric_norm(pt.theta, t)
    pairing = d.d_theta**2 + d.d_lambda**2 + d.grad_u_norm**2
    return PseudoGradient(
        t, d.dual_norm, mn / d.dual_norm, pairing / d.dual_norm**2
    )


def band_cutoff(J: float, b: float, eps_bar: float) -> float:
    """1 inside the half band around level b, 0 outside the full band."""
    dist = abs(J - b)
    if dist <= 0.5 * eps_bar:
        return 1.0
    if dist >= eps_bar:
        return 0.0
    return 2.0 - 2.0 * dist / eps_bar


def radius_cutoff(dist: float, R: float) -> float:
    """1 inside half the travel radius, 0 at the full radius."""
    if dist <= 0.5 * R:
        return 1.0
    if dist >= R:
        return 0.0
    return (R - dist) / (0.5 * R)


@dataclass
class DeformResult:
    """Outcome of the localized descent flow."""

    point: AugmentedPoint
    trace: list
    reason: str
    path_length: float
    steps: int

    @property
    def J_values(self):
        return [row[3] for row in self.trace]


def deform(
    pt: AugmentedPoint,
    nl,
    m: float,
    b: float,
    eps_bar: float,
    radius: float,
    max_steps: int = 400,
    dt0: float = 0.05,
    stationary_rtol: float = 1e-9,
) -> DeformResult:
    """Integrate the band-localized unit-speed descent flow from pt.

    J never increases along the returned trajectory (enforced by step
    halving). Points outside the energy band are fixed points of the flow
    and are returned unchanged with reason 'left-band'."""
    theta, lam = pt.theta, pt.lam
    u = pt.u.u.copy()
    grid = pt.u.grid
    trace = []
    dist = 0.0
    dt = dt0
    reason = "budget"
    steps_done = 0
    for k in range(max_steps):
        cur = AugmentedPoint(theta, lam, Profile(grid, u))
        rep = energies(cur, nl, m)
        d = differential(cur, nl, m)
        psi = band_cutoff(rep.J, b, eps_bar)
        phi = radius_cutoff(dist, radius)
        trace.append(
            (k, theta, lam, rep.J, rep.P, d.dual_norm, psi, phi)
        )
        if psi == 0.0:
            reason = "left-band"
            break
        if phi == 0.0:
            reason = "radius"
            break
        if d.dual_norm <= stationary_rtol * (1.0 + abs(rep.J)):
            reason = "stationary"
            break
        speed = psi * phi
        gn = d.dual_norm
        # cap the dilation-slot motion per step
        if abs(d.d_theta) > 0:
            dt = min(dt, FLOW_THETA_CAP * gn / (speed * abs(d.d_theta)))
        accepted = False
        for _ in range(8):
            c = dt * speed / gn
            cand_theta = theta - c * d.d_theta
            cand_lam = lam - c * d.d_lambda
            cand_u = u - c * d.grad_u.u
            J_new = energies(
                AugmentedPoint(cand_theta, cand_lam, Profile(grid, cand_u)),
                nl,
                m,
            ).J
            if J_new <= rep.J + 1e-12 * (1.0 + abs(rep.J)):
                accepted = True
                break
            dt *= 0.5
        if not accepted:
            reason = "stall"
            break
        theta, lam, u = cand_theta, cand_lam, cand_u
        dist += dt * speed
        dt = min(dt * 1.3, dt0)
        steps_done = k + 1
    else:
        cur = AugmentedPoint(theta, lam, Profile(grid, u))
        rep = energies(cur, nl, m)
        d = differential(cur, nl, m)
        trace.append(
            (
                max_steps,
                theta,
                lam,
                rep.J,
                rep.P,
                d.dual_norm,
                band_cutoff(rep.J, b, eps_bar),
                radius_cutoff(dist, radius),
            )
        )
    return DeformResult(
        point=AugmentedPoint(theta, lam, Profile(grid, u)),
        trace=trace,
        reason=reason,
        path_length=dist,
        steps=steps_done,
    )


def dilation_energy_profile(nl, lam: float, prof: Profile, thetas) -> np.ndarray:
    """Frozen-multiplier energy of dilates of prof at each log-scale."""
    mass = float((prof.grid.sigma * prof.grid.w) @ (prof.u * prof.u))
    out = np.empty(len(thetas))
    el = math.exp(lam)
    for i, th in enumerate(thetas):
        rep = energies(AugmentedPoint(float(th), lam, prof), nl, mass)
        out[i] = rep.J + 0.5 * el * mass
    return out
