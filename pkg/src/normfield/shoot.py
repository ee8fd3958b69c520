"""Radial bound states by shooting.

The profile equation  u'' + (N-1)/r u' = e^lam u - g(u)  is a particle in the
potential  W(xi) = G(xi) - e^lam xi^2/2  with friction (N-1)/r.  The friction
energy  H = u'^2/2 + W(u)  never increases, which yields sharp classification
rules for a shot released at rest from amplitude s:

* crossing zero requires H > 0 there, so once H < 0 no further sign change
  can ever occur (the shot is trapped near a well of W);
* amplitudes with W(s) <= 0 are trapped immediately and never cross;
* a decaying profile rides the stable manifold of the rest point at 0 and is
  the threshold between "k sign changes" and "k+1 sign changes".

The k-node bound state is located by bisecting the release amplitude on the
crossing count, then the sampled shot is polished by a damped Newton
iteration on the grid collocation system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from threading import Lock

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import solve_banded
from scipy.optimize import brentq

from .energy import AugmentedPoint, energies
from .errors import ConvergenceError
from .grid import DEFAULT_N_NODES, DEFAULT_R0, Profile, grid_for_mu

__all__ = [
    "ShotOutcome",
    "BranchSample",
    "min_crossing_amplitude",
    "shoot",
    "amplitude_bracket",
    "amplitude",
    "shoot_profile",
    "polish",
    "count_nodes",
    "find_bound_state",
    "branch",
    "least_energy_E0",
]

SHOT_RTOL = 1e-10
SHOT_ATOL = 1e-12
SEARCH_RTOL = 1e-12
TAIL_FLOOR = 1e-9
DECAY_FLOOR = 1e-7
BLOWUP_FACTOR = 10.0
HORIZON_FACTOR = 40.0


@dataclass
class ShotOutcome:
    """Classification of one shot.

    kind is 'decay' when the shot tracked the stable manifold down to
    DECAY_FLOOR times its release amplitude, 'blowup' when it left the
    amplitude box (sign records the escape direction), otherwise
    'undetermined' with a reason ('trapped' when the friction energy went
    negative, which certifies that no further sign change can occur).
    node_count is the number of zero crossings observed before exit.
    """

    kind: str
    node_count: int
    exit_radius: float
    sign: int = 0
    reason: str | None = None


def min_crossing_amplitude(nl, lam: float) -> float:
    """Smallest release amplitude whose shot can ever cross zero.

    This is the first positive zero of W beyond the origin: below it the
    friction energy starts negative and the shot stays one-signed forever.
    Raises ValueError when W <= 0 everywhere (multiplier at or above the
    amplitude bound, no crossing is possible at any amplitude).
    """
    mu = math.exp(lam)
    xs = np.geomspace(1e-14, 1e10, 24001)
    Ws = nl.G(xs) - 0.5 * mu * xs**2
    pos = np.nonzero(Ws > 0)[0]
    if pos.size == 0 or pos[0] == 0:
        raise ValueError(
            f"no admissible release amplitude at lam={lam:g}: "
            "potential never becomes positive on the scan"
        )
    i = pos[0]
    return float(
        brentq(
            lambda x: float(nl.G(x)) - 0.5 * mu * x * x,
            xs[i - 1],
            xs[i],
            xtol=1e-300,
            rtol=8.9e-16,
        )
    )


def _integrate(nl, lam, s, N, r_end=None, dense=False):
    """Shoot from rest at amplitude s; returns (outcome, solution or None)."""
    mu = math.exp(lam)
    if r_end is None:
        r_end = HORIZON_FACTOR / math.sqrt(mu)
    W0 = float(nl.G(s)) - 0.5 * mu * s * s
    if W0 <= 0.0 and s > 0.0:
        # negative friction energy forbids any zero crossing; the shot is
        # trapped outright if a potential wall further out blocks escape
        xs = np.geomspace(s * 1.001, s * 1e6, 2001)
        wall = float(np.max(nl.G(xs) - 0.5 * mu * xs**2))
        if wall >= W0:
            return ShotOutcome("undetermined", 0, 0.0, reason="trapped"), None
    eps_H = 1e-11 * max(abs(W0), mu * s * s)
    box = BLOWUP_FACTOR * max(abs(s), 1.0)

    def rhs(r, y):
        u, v = y
        f = mu * u - float(nl.g(u))
        if r < 1e-12:
            return (v, f / N)
        return (v, f - (N - 1) * v / r)

    def ev_cross(r, y):
        return y[0]

    def ev_trap(r, y):
        u, v = y
        return 0.5 * v * v + float(nl.G(u)) - 0.5 * mu * u * u + eps_H

    ev_trap.terminal = True
    ev_trap.direction = -1

    def ev_blow(r, y):
        return abs(y[0]) - box

    ev_blow.terminal = True
    ev_blow.direction = 1

    sol = solve_ivp(
        rhs,
        (0.0, r_end),
        (float(s), 0.0),
        method="RK45",
        rtol=SHOT_RTOL,
        atol=SHOT_ATOL * max(1.0, abs(s)),
        events=(ev_cross, ev_trap, ev_blow),
        dense_output=dense,
    )
    crossings = int(sol.t_events[0].size)
    exit_r = float(sol.t[-1])
    min_u = float(np.min(np.abs(sol.y[0])))
    if sol.t_events[2].size:
        sign = 1 if sol.y[0, -1] > 0 else -1
        return ShotOutcome("blowup", crossings, exit_r, sign=sign), sol
    if min_u <= DECAY_FLOOR * abs(s):
        return ShotOutcome("decay", crossings, exit_r), sol
    if sol.t_events[1].size:
        return ShotOutcome("undetermined", crossings, exit_r, reason="trapped"), sol
    return ShotOutcome("undetermined", crossings, exit_r, reason="no-decision"), sol


def shoot(nl, lam: float, s: float, N: int | None = None,
          r_end: float | None = None) -> ShotOutcome:
    """Classify the shot released at rest from amplitude s."""
    out, _ = _integrate(nl, lam, s, N if N is not None else nl.N, r_end)
    return out


def amplitude_bracket(nl, lam, N, nodes=0, growth=1.25, span=1e6):
    """Release amplitudes (s_lo, s_hi) with <= nodes crossings at s_lo and
    >= nodes+1 at s_hi, found by an upward geometric scan."""
    xi0 = min_crossing_amplitude(nl, lam)
    s_lo, s = xi0, xi0 * 1.02
    while s <= xi0 * span:
        out = _integrate(nl, lam, s, N)[0]
        if out.node_count >= nodes + 1:
            return s_lo, s
        if out.kind == "blowup":
            raise ConvergenceError(
                f"shots escape to {'+' if out.sign > 0 else '-'}inf after "
                f"{out.node_count} crossings before reaching {nodes + 1}; "
                f"no {nodes}-node state at lam={lam:g}"
            )
        s_lo = s
        s *= growth
    raise ConvergenceError(
        f"no amplitude with {nodes + 1} crossings up to {xi0 * span:g} "
        f"at lam={lam:g}"
    )


def amplitude(nl, lam: float, N: int | None = None, nodes: int = 0) -> float:
    """Release amplitude of the k-node bound state, bisected to ~1e-12."""
    N = N if N is not None else nl.N
    s_lo, s_hi = amplitude_bracket(nl, lam, N, nodes)
    while s_hi - s_lo > SEARCH_RTOL * s_hi:
        mid = 0.5 * (s_lo + s_hi)
        if _integrate(nl, lam, mid, N)[0].node_count >= nodes + 1:
            s_hi = mid
        else:
            s_lo = mid
    return 0.5 * (s_lo + s_hi)


def shoot_profile(nl, lam, s, grid) -> np.ndarray:
    """Sample the shot onto grid nodes, splicing the decay asymptote
    (r^(-(N-1)/2) e^(-sqrt(mu) r)) beyond the trusted radius where the
    tracked solution drops below TAIL_FLOOR times the release amplitude."""
    N = grid.N
    mu = math.exp(lam)
    out, sol = _integrate(nl, lam, s, N, dense=True)
    if sol is None:
        return np.zeros(grid.r.size)
    r_hi = float(sol.t[-1])
    probe = np.linspace(0.0, r_hi, 4097)
    vals = sol.sol(probe)[0]
    below = np.nonzero(np.abs(vals) <= TAIL_FLOOR * abs(s))[0]
    if below.size:
        r_t = probe[below[0]]
    else:
        r_t = probe[int(np.argmin(np.abs(vals)))]
    rr = grid.r
    u = np.zeros(rr.size)
    inside = rr <= r_t
    if inside.any():
        u[inside] = sol.sol(rr[inside])[0]
    rest = ~inside
    if rest.any():
        r_t = max(r_t, 1e-8)
        u_t = float(sol.sol(r_t)[0])
        u[rest] = (
            u_t
            * (rr[rest] / r_t) ** (-(N - 1) / 2.0)
            * np.exp(-math.sqrt(mu) * (rr[rest] - r_t))
        )
    u[-1] = 0.0
    return u


def _banded_rows(A, kl, ku):
    n = A.shape[0]
    ab = np.zeros((kl + ku + 1, n))
    for k in range(-kl, ku + 1):
        diag = np.diagonal(A, k)
        ab[ku - k, max(0, k) : max(0, k) + diag.size] = diag
    return ab


def polish(nl, lam, u0, grid, tol=1e-11, floor_tol=1e-8, max_iter=60):
    """Damped Newton iteration on the collocation system
    -lap u + e^lam u - g(u) = 0 with u = 0 at the outer boundary.

    Returns (u, max-residual). Targets tol times the natural equation scale
    but accepts stagnation at the rounding floor of the stencil matvec as
    long as the residual is below floor_tol times that scale; otherwise
    raises ConvergenceError."""
    mu = math.exp(lam)
    L = grid.lap_matrix()
    u = np.array(u0, dtype=float, copy=True)
    u[-1] = 0.0

    def residual(v):
        R = -(L @ v) + mu * v - nl.g(v)
        R[-1] = v[-1]
        return R

    R = residual(u)
    best_u, best_rn, stall = u, math.inf, 0
    for _ in range(max_iter):
        amp = float(np.max(np.abs(u)))
        scale = mu * max(1.0, amp) + float(np.max(np.abs(nl.g(u)))) + 1.0
        rn = float(np.max(np.abs(R)))
        if rn < 0.5 * best_rn:
            best_u, best_rn, stall = u, rn, 0
        else:
            if rn < best_rn:
                best_u, best_rn = u, rn
            stall += 1
        if rn <= tol * scale:
            return u, rn
        if stall >= 3:
            break
        Jm = -L + np.diag(mu - nl.gprime(u))
        Jm[-1, :] = 0.0
        Jm[-1, -1] = 1.0
        d = solve_banded((6, 6), _banded_rows(Jm, 6, 6), -R)
        step = 1.0
        u_new, R_new = u + d, residual(u + d)
        while step > 1e-3 and np.max(np.abs(R_new)) > rn * (1.0 - 0.25 * step):
            step *= 0.5
            u_new = u + step * d
            R_new = residual(u_new)
        u, R = u_new, R_new
    amp = float(np.max(np.abs(best_u)))
    scale = mu * max(1.0, amp) + float(np.max(np.abs(nl.g(best_u)))) + 1.0
    if best_rn <= floor_tol * scale:
        return best_u, best_rn
    raise ConvergenceError(
        f"collocation Newton stalled at residual {best_rn:.3e} (lam={lam:g})"
    )


def count_nodes(u, rel=1e-8) -> int:
    """Sign changes of u, ignoring entries below rel times the peak."""
    a = float(np.max(np.abs(u)))
    if a == 0.0:
        return 0
    sig = u[np.abs(u) > rel * a]
    if sig.size < 2:
        return 0
    return int(np.sum(np.signbit(sig[:-1]) != np.signbit(sig[1:])))


@dataclass
class BranchSample:
    """One validated bound state on a multiplier branch."""

    lam: float
    nodes: int
    amplitude: float
    Ihat: float
    mass: float
    pohozaev_residual: float
    nehari_residual: float
    profile: Profile = field(repr=False)

    CSV_HEADER = (
        "lambda",
        "nodes",
        "amplitude",
        "Ihat",
        "mass",
        "pohozaev_residual",
        "nehari_residual",
    )

    def csv_row(self):
        return (
            self.lam,
            self.nodes,
            self.amplitude,
            self.Ihat,
            self.mass,
            self.pohozaev_residual,
            self.nehari_residual,
        )


def find_bound_state(
    nl,
    lam: float,
    nodes: int = 0,
    n: int = DEFAULT_N_NODES,
    r0: float = DEFAULT_R0,
    tol: float = 1e-6,
) -> BranchSample:
    """k-node radial bound state at multiplier e^lam: shoot, bisect, polish,
    then validate the dilation identity and the Nehari pairing before
    returning. Raises ConvergenceError when the state cannot be certified."""
    N = nl.N
    mu = math.exp(lam)
    s = amplitude(nl, lam, N, nodes)
    failure = None
    # retries widen the domain (for truncation) and refine (for quadrature)
    for trial_n, trial_r0 in ((n, r0), (round(1.5 * n), 1.5 * r0), (2 * n, 2 * r0)):
        grid = grid_for_mu(N, mu, trial_n, trial_r0)
        u = shoot_profile(nl, lam, s, grid)
        u, _ = polish(nl, lam, u, grid)
        k = count_nodes(u)
        if k != nodes:
            raise ConvergenceError(
                f"polished state has {k} nodes, wanted {nodes} (lam={lam:g})"
            )
        prof = Profile(grid, u)
        wa = grid.sigma * grid.w
        du = grid.derivative(u)
        grad2 = float(wa @ (du * du))
        mass2 = float(wa @ (u * u))
        gu = float(wa @ (nl.g(u) * u))
        rep = energies(AugmentedPoint(0.0, lam, prof), nl, m=mass2)
        nehari = grad2 + mu * mass2 - gu
        if abs(rep.P) > tol * (1.0 + abs(rep.Ihat)):
            failure = (
                f"dilation identity residual {rep.P:.3e} exceeds tolerance "
                f"at lam={lam:g}"
            )
            continue  # one refinement retry for discretization error
        if abs(nehari) > tol * (grad2 + mass2):
            failure = (
                f"Nehari residual {nehari:.3e} exceeds tolerance at lam={lam:g}"
            )
            continue
        return BranchSample(
            lam=lam,
            nodes=k,
            amplitude=float(u[0]),
            Ihat=rep.Ihat,
            mass=mass2,
            pohozaev_residual=rep.P,
            nehari_residual=nehari,
            profile=prof,
        )
    raise ConvergenceError(failure)


def branch(nl, lams, nodes=0, n=DEFAULT_N_NODES, r0=DEFAULT_R0, tol=1e-6):
    """Bound states for each multiplier in lams (ascending order)."""
    return [
        find_bound_state(nl, lam, nodes, n, r0, tol) for lam in sorted(lams)
    ]


_E0_CACHE: dict = {}
_E0_LOCK = Lock()


def least_energy_E0(N: int, n: int = DEFAULT_N_NODES) -> float:
    """Frozen-multiplier energy of the least-energy state of the critical
    pure power at lam = 0 (equal to half its squared mass); cached."""
    from .nonlin import PurePower, p_critical

    key = (N, n)
    with _E0_LOCK:
        if key not in _E0_CACHE:
            samp = find_bound_state(PurePower(q=p_critical(N), N=N), 0.0, n=n)
            _E0_CACHE[key] = samp.Ihat
        return _E0_CACHE[key]
