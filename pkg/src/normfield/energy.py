"""Energy functionals on the augmented space (theta, lambda, u).

For a radial profile u with squared norms grad2 = ||grad u||^2, m2 = ||u||^2
and potential integral intG = int G(u), the functionals are

    F    = grad2/2 - intG                      (free energy)
    Ihat = grad2/2 + e^lam m2/2 - intG         (frozen-multiplier energy)
    I    = Ihat - e^lam m/2                    (penalized energy, target mass m)
    J    = e^((N-2)theta) grad2/2 - e^(N theta) intG
           + e^lam (e^(N theta) m2 - m)/2      (I after dilation by e^theta)
    P    = (N-2)/2 grad2 + N (e^lam m2/2 - intG)   (dilation derivative of I)

J(theta, lam, u) equals I(lam, u(./e^theta)) exactly in the continuum and up
to interpolation error on the grid. The metric on the augmented space weights
the u-slot by the dilated H1 product, so gradients and dual norms depend on
theta only through explicit exponential factors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Profile, norm as profile_norm
from .nonlin import envelope_constant

__all__ = [
    "AugmentedPoint",
    "Tangent",
    "EnergyReport",
    "Differential",
    "PSPResidual",
    "OmegaParams",
    "energies",
    "differential",
    "metric_norm",
    "psp_residual",
    "delta_for_mass",
    "omega_params",
    "diagnose_psp_sequence",
]


@dataclass
class AugmentedPoint:
    """Point of the augmented space: dilation log-scale, multiplier log, profile."""

    theta: float
    lam: float
    u: Profile


@dataclass
class Tangent:
    """Tangent direction (alpha, nu, h) at an augmented point."""

    alpha: float
    nu: float
    h: Profile


@dataclass
class EnergyReport:
    """All scalar energies at one augmented point (mass is ||u||_2^2)."""

    theta: float
    lam: float
    m: float
    F: float
    Ihat: float
    I: float
    J: float
    P: float
    mass: float

    CSV_HEADER = ("theta", "lambda", "F", "Ihat", "I", "J", "P", "mass")

    def csv_row(self):
        return (self.theta, self.lam, self.F, self.Ihat, self.I, self.J,
                self.P, self.mass)


@dataclass
class Differential:
    """Differential of J at an augmented point.

    grad_u is the Riesz representative of the u-slot against the
    theta-weighted H1 product; grad_u_norm its dual norm; dual_norm the full
    dual norm sqrt(d_theta^2 + d_lambda^2 + grad_u_norm^2).
    """

    d_theta: float
    d_lambda: float
    grad_u: Profile
    grad_u_norm: float
    dual_norm: float


@dataclass
class PSPResidual:
    """Residual magnitudes of the constrained criticality system at (lam, u)."""

    dI_dlambda: float
    grad_u_norm: float
    pohozaev: float
    level: float

    def total(self):
        return math.sqrt(
            self.dI_dlambda**2 + self.grad_u_norm**2 + self.pohozaev**2
        )


def _integrals(pt: AugmentedPoint, nl):
    """One quadrature pass: (grad2, mass2, intG)."""
    g = pt.u.grid
    u = pt.u.u
    wa = g.sigma * g.w
    grad2 = g.grad_dot(u, u)
    mass2 = float(wa @ (u * u))
    intG = float(wa @ nl.G(u))
    return grad2, mass2, intG


def energies(pt: AugmentedPoint, nl, m: float) -> EnergyReport:
    """Evaluate every functional at pt in a single quadrature pass."""
    N = pt.u.grid.N
    grad2, mass2, intG = _integrals(pt, nl)
    el = math.exp(pt.lam)
    F = 0.5 * grad2 - intG
    Ihat = 0.5 * grad2 + 0.5 * el * mass2 - intG
    I = 0.5 * grad2 - intG + 0.5 * el * (mass2 - m)
    enth = math.exp(N * pt.theta)
    J = (
        0.5 * math.exp((N - 2) * pt.theta) * grad2
        - enth * intG
        + 0.5 * el * (enth * mass2 - m)
    )
    P = 0.5 * (N - 2) * grad2 + N * (0.5 * el * mass2 - intG)
    return EnergyReport(pt.theta, pt.lam, m, F, Ihat, I, J, P, mass2)


def differential(pt: AugmentedPoint, nl, m: float) -> Differential:
    """Partial derivatives of J and the Riesz representative of its u-slot."""
    g = pt.u.grid
    N = g.N
    u = pt.u.u
    grad2, mass2, intG = _integrals(pt, nl)
    el = math.exp(pt.lam)
    e_grad = math.exp((N - 2) * pt.theta)
    e_mass = math.exp(N * pt.theta)

    d_theta = 0.5 * (N - 2) * e_grad * grad2 + N * e_mass * (
        0.5 * el * mass2 - intG
    )
    d_lambda = 0.5 * el * (e_mass * mass2 - m)

    # action vector of the u-derivative: h -> h^T b
    Md = g.mass_diag
    b = e_grad * (g.stiffness @ u) + Md * (el * e_mass * u - e_mass * nl.g(u))
    solve = g.h1_solver(e_grad, e_mass)
    rho = solve(b)
    gn2 = max(float(rho @ b), 0.0)
    grad_u_norm = math.sqrt(gn2)
    dual = math.sqrt(d_theta**2 + d_lambda**2 + gn2)
    return Differential(d_theta, d_lambda, Profile(g, rho), grad_u_norm, dual)


def metric_norm(theta: float, t: Tangent) -> float:
    """Norm of a tangent in the theta-weighted metric."""
    g = t.h.grid
    h = t.h.u
    grad2 = g.grad_dot(h, h)
    mass2 = g.l2dot(h, h)
    N = g.N
    return math.sqrt(
        t.alpha**2
        + t.nu**2
        + math.exp((N - 2) * theta) * grad2
        + math.exp(N * theta) * mass2
    )


def psp_residual(lam: float, u: Profile, nl, m: float) -> PSPResidual:
    """Residuals of constrained criticality at theta = 0: multiplier-slot
    derivative, dual norm of the u-derivative in plain H1, dilation identity
    defect, and the level I itself."""
    pt = AugmentedPoint(0.0, lam, u)
    rep = energies(pt, nl, m)
    g = u.grid
    el = math.exp(lam)
    b = g.stiffness @ u.u + g.mass_diag * (el * u.u - nl.g(u.u))
    rho = g.h1_solver(1.0, 1.0)(b)
    gn = math.sqrt(max(float(rho @ b), 0.0))
    return PSPResidual(
        dI_dlambda=abs(0.5 * el * (rep.mass - m)),
        grad_u_norm=gn,
        pohozaev=abs(rep.P),
        level=rep.I,
    )


# ---------------------------------------------------------------------------
# envelope region bounds


def delta_for_mass(m: float, E0: float, p: float, margin: float = 0.1) -> float:
    """Largest-envelope delta with delta^(-2/(p-1)) E0 = (1+margin) m/2."""
    if m <= 0 or E0 <= 0:
        raise ValueError("need m > 0 and E0 > 0")
    return (2.0 * E0 / ((1.0 + margin) * m)) ** ((p - 1.0) / 2.0)


@dataclass
class OmegaParams:
    """Envelope region data for target mass m.

    B_m lower-bounds the penalized energy I on both boundary pieces of the
    region: B0 on the scaled-constraint piece (multiplier above lambda_m),
    B1 on the fixed-multiplier piece.
    """

    m: float
    delta: float
    C_delta: float
    lambda_m: float
    B0: float
    B1: float

    @property
    def B_m(self):
        return min(self.B0, self.B1)


def omega_params(nl, m: float, E0: float, delta: float | None = None) -> OmegaParams:
    p = nl.p
    if delta is None:
        delta = delta_for_mass(m, E0, p)
    C = envelope_constant(nl, delta)
    lam_m = math.log(C + 1.0)
    scale = delta ** (-2.0 / (p - 1.0)) * E0
    B0 = math.exp(lam_m) * (scale - m / 2.0) - C * scale
    B1 = -0.5 * math.exp(lam_m) * m
    return OmegaParams(m, delta, C, lam_m, B0, B1)


# ---------------------------------------------------------------------------
# sequence diagnostics


def diagnose_psp_sequence(points, nl, m: float) -> dict:
    """Decide whether a sequence of (lam, Profile) pairs with vanishing
    criticality residuals converges along a subsequence or escapes.

    Returns a dict with per-term residuals and levels, the apparent limit
    level, and compact = 'no' when residuals vanish while the tail keeps a
    uniformly positive mutual distance (multiplier or profile escape)."""
    res = [psp_residual(lam, u, nl, m) for lam, u in points]
    totals = [r.total() for r in res]
    levels = [r.level for r in res]
    k = len(points)
    out = {
        "residuals": totals,
        "levels": levels,
        "level_limit": levels[-1] if levels else math.nan,
        "residuals_vanish": bool(
            k >= 3 and totals[-1] <= 1e-6 * (1.0 + abs(levels[-1]))
            and totals[-1] <= totals[0]
        ),
    }
    tail = points[k // 2 :]
    seps = []
    for i in range(len(tail)):
        for j in range(i + 1, len(tail)):
            dl = abs(tail[i][0] - tail[j][0])
            dh = profile_norm(
                Profile(tail[i][1].grid, tail[i][1].u - tail[j][1].u), "H1"
            )
            seps.append(math.hypot(dl, dh))
    min_sep = min(seps) if seps else 0.0
    out["tail_min_separation"] = min_sep
    if out["residuals_vanish"] and min_sep >= 0.5:
        out["compact"] = "no"
        out["note"] = (
            "residuals vanish but the tail stays uniformly separated; "
            "no convergent subsequence (multiplier escape)"
        )
    elif out["residuals_vanish"]:
        out["compact"] = "undetermined"
        out["note"] = "residuals vanish; separation inconclusive"
    else:
        out["compact"] = "undetermined"
        out["note"] = "residuals do not vanish along the sequence"
    return out
