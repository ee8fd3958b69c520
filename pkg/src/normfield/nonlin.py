"""Nonlinearity models g and their antiderivatives G.

Every model evaluates the pair (g, G) vectorized over xi, reports its exact
small- and large-amplitude power behavior when it has one, and can be screened
against the structural conditions used by the variational machinery
(continuity, sublinearity at zero, subcriticality at infinity, a point of
positive potential, oddness) plus the two mutually exclusive small-amplitude
regimes that decide whether the mass threshold vanishes or is positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import hyp2f1

from .errors import ConditionViolationError, TailUndeterminedError

__all__ = [
    "PurePower",
    "CombinedPower",
    "Saturating",
    "Tabulated",
    "ConditionReport",
    "p_critical",
    "eval_pair",
    "lambda0",
    "envelope_constant",
    "classify",
]

#: verification lattice used by envelope_constant and the scan oracle
LATTICE_LO, LATTICE_HI, LATTICE_PTS = 1e-8, 1e8, 10_000
ENVELOPE_SAFETY = 1.05


def p_critical(N: int) -> float:
    """Mass-critical exponent 1 + 4/N for dimension N."""
    return 1.0 + 4.0 / N


def _as_array(xi):
    return np.asarray(xi, dtype=float)


class Nonlinearity:
    """Base class. Subclasses provide g, G, gprime and behavior descriptors."""

    N: int

    def g(self, xi):
        raise NotImplementedError

    def G(self, xi):
        raise NotImplementedError

    def gprime(self, xi):
        raise NotImplementedError

    @property
    def odd(self) -> bool:
        raise NotImplementedError

    def small_behavior(self):
        """(exponent, coefficient) of g near 0, or None if undetermined."""
        return None

    def large_behavior(self):
        """(exponent, coefficient) of g near infinity, or None if undetermined."""
        return None

    @property
    def p(self) -> float:
        return p_critical(self.N)

    def label(self) -> str:
        return type(self).__name__


@dataclass(frozen=True)
class PurePower(Nonlinearity):
    """g(xi) = |xi|^(q-1) xi with q > 1."""

    q: float
    N: int = 3

    def __post_init__(self):
        if not self.q > 1:
            raise ValueError("exponent q must exceed 1")

    def g(self, xi):
        xi = _as_array(xi)
        return np.abs(xi) ** (self.q - 1.0) * xi

    def G(self, xi):
        xi = _as_array(xi)
        return np.abs(xi) ** (self.q + 1.0) / (self.q + 1.0)

    def gprime(self, xi):
        xi = _as_array(xi)
        return self.q * np.abs(xi) ** (self.q - 1.0)

    @property
    def odd(self):
        return True

    def small_behavior(self):
        return (self.q, 1.0)

    def large_behavior(self):
        return (self.q, 1.0)

    def label(self):
        return f"pure_power(q={self.q:g})"


def _norm_terms(terms):
    out = []
    for t in terms:
        if len(t) == 2:
            c, q = t
            parity = "odd"
        else:
            c, q, parity = t
        if parity not in ("odd", "even"):
            raise ValueError(f"term parity must be 'odd' or 'even', got {parity!r}")
        if not q > 1:
            raise ValueError("every exponent must exceed 1")
        out.append((float(c), float(q), parity))
    return tuple(sorted(out, key=lambda t: t[1]))


@dataclass(frozen=True)
class CombinedPower(Nonlinearity):
    """Sum of power terms.

    Each term is (coefficient, exponent) or (coefficient, exponent, parity).
    Parity 'odd' gives c|xi|^(q-1) xi, 'even' gives c|xi|^q; the even form
    admits non-odd models such as g(xi) = xi^2.
    """

    terms: tuple
    N: int = 3

    def __post_init__(self):
        object.__setattr__(self, "terms", _norm_terms(self.terms))
        if not self.terms:
            raise ValueError("need at least one term")

    def g(self, xi):
        xi = _as_array(xi)
        out = np.zeros_like(xi)
        for c, q, parity in self.terms:
            if parity == "odd":
                out += c * np.abs(xi) ** (q - 1.0) * xi
            else:
                out += c * np.abs(xi) ** q
        return out

    def G(self, xi):
        xi = _as_array(xi)
        out = np.zeros_like(xi)
        for c, q, parity in self.terms:
            if parity == "odd":
                out += c * np.abs(xi) ** (q + 1.0) / (q + 1.0)
            else:
                out += c * np.sign(xi) * np.abs(xi) ** (q + 1.0) / (q + 1.0)
        return out

    def gprime(self, xi):
        xi = _as_array(xi)
        out = np.zeros_like(xi)
        for c, q, parity in self.terms:
            if parity == "odd":
                out += c * q * np.abs(xi) ** (q - 1.0)
            else:
                out += c * q * np.sign(xi) * np.abs(xi) ** (q - 1.0)
        return out

    @property
    def odd(self):
        return all(parity == "odd" for _, _, parity in self.terms)

    def small_behavior(self):
        c, q, _ = self.terms[0]
        return (q, c)

    def large_behavior(self):
        c, q, _ = self.terms[-1]
        return (q, c)

    def label(self):
        inner = ", ".join(
            f"({c:g}, {q:g})" if parity == "odd" else f"({c:g}, {q:g}, even)"
            for c, q, parity in self.terms
        )
        return f"combined_power[{inner}]"


@dataclass(frozen=True)
class Saturating(Nonlinearity):
    """g(xi) = |xi|^(q-1) xi / (1 + |xi|^s): power q at zero, power q-s at infinity."""

    q: float
    s: float
    N: int = 3

    def __post_init__(self):
        if not self.q > 1 or not self.s > 0:
            raise ValueError("need q > 1 and s > 0")

    def g(self, xi):
        xi = _as_array(xi)
        return np.abs(xi) ** (self.q - 1.0) * xi / (1.0 + np.abs(xi) ** self.s)

    def G(self, xi):
        # int_0^x t^q/(1+t^s) dt = x^(q+1)/(q+1) * 2F1(1, a; a+1; -x^s), a=(q+1)/s
        xi = _as_array(xi)
        a = (self.q + 1.0) / self.s
        x = np.abs(xi)
        with np.errstate(over="ignore"):
            out = x ** (self.q + 1.0) / (self.q + 1.0) * hyp2f1(
                1.0, a, a + 1.0, -(x ** self.s)
            )
        return out

    def gprime(self, xi):
        xi = _as_array(xi)
        ax = np.abs(xi)
        den = (1.0 + ax ** self.s) ** 2
        return ax ** (self.q - 1.0) * (self.q + (self.q - self.s) * ax ** self.s) / den

    @property
    def odd(self):
        return True

    def small_behavior(self):
        return (self.q, 1.0)

    def large_behavior(self):
        return (self.q - self.s, 1.0)

    def label(self):
        return f"saturating(q={self.q:g}, s={self.s:g})"


class Tabulated(Nonlinearity):
    """Nonlinearity interpolated from (xi, g) samples.

    Inside the table, g is a monotone cubic interpolant and G its exact
    antiderivative anchored at G(0) = 0. Outside the table, g extends with its
    end values (kept continuous); the asymptotic behavior is undetermined and
    classification reports it as such rather than extrapolating.
    """

    def __init__(self, xi, g, N=3, name="tabulated"):
        xi = np.asarray(xi, dtype=float)
        g = np.asarray(g, dtype=float)
        if xi.ndim != 1 or xi.shape != g.shape or xi.size < 4:
            raise ValueError("need matching 1-d arrays with at least 4 samples")
        if not np.all(np.diff(xi) > 0):
            raise ValueError("xi samples must be strictly increasing")
        if not (xi[0] <= 0.0 <= xi[-1]):
            raise ValueError("the table must bracket xi = 0 to anchor G(0) = 0")
        if not np.all(np.isfinite(g)):
            raise ValueError("g samples must be finite")
        self.xi = xi
        self.gvals = g
        self.N = int(N)
        self.name = name
        self._interp = PchipInterpolator(xi, g, extrapolate=False)
        anti = self._interp.antiderivative()
        self._anti = anti
        self._anti0 = float(anti(0.0))
        self._dg = self._interp.derivative()

    @classmethod
    def from_file(cls, path, N=3, name=None):
        data = np.loadtxt(path)
        if data.ndim != 2 or data.shape[1] != 2:
            raise ValueError(f"{path}: expected two columns (xi, g)")
        return cls(data[:, 0], data[:, 1], N=N, name=name or str(path))

    def g(self, xi):
        xi = _as_array(xi)
        lo, hi = self.xi[0], self.xi[-1]
        clipped = np.clip(xi, lo, hi)
        return self._interp(clipped)

    def G(self, xi):
        xi = _as_array(xi)
        lo, hi = self.xi[0], self.xi[-1]
        clipped = np.clip(xi, lo, hi)
        out = self._anti(clipped) - self._anti0
        # constant-g extension integrates linearly past the table
        out = out + np.where(xi > hi, (xi - hi) * self.gvals[-1], 0.0)
        out = out + np.where(xi < lo, (xi - lo) * self.gvals[0], 0.0)
        return out

    def gprime(self, xi):
        xi = _as_array(xi)
        lo, hi = self.xi[0], self.xi[-1]
        inside = (xi >= lo) & (xi <= hi)
        out = np.zeros_like(xi)
        out[inside] = self._dg(xi[inside])
        return out

    @property
    def odd(self):
        # parity is decided by sampling, not declared
        probe = np.linspace(0.0, min(abs(self.xi[0]), self.xi[-1]), 64)[1:]
        if probe.size == 0:
            return False
        gp = self.g(probe)
        gm = self.g(-probe)
        scale = np.max(np.abs(gp)) + 1e-300
        return bool(np.max(np.abs(gp + gm)) <= 1e-10 * scale)

    def small_behavior(self):
        return self._fit_behavior(small=True)

    def large_behavior(self):
        return None  # tails beyond the table are undetermined by policy

    def _fit_behavior(self, small):
        """Log-log slope fit near zero; None when the fit is unconvincing."""
        hi = min(abs(self.xi[0]), abs(self.xi[-1]))
        if hi <= 0:
            return None
        ts = np.geomspace(hi * 1e-4, hi * 1e-1, 24)
        gs = np.asarray(self.g(ts))
        if np.any(gs <= 0):
            return None
        coef = np.polyfit(np.log(ts), np.log(gs), 1)
        resid = np.log(gs) - np.polyval(coef, np.log(ts))
        if np.max(np.abs(resid)) > 1e-3:
            return None
        return (float(coef[0]), float(math.exp(coef[1])))

    def label(self):
        return self.name


# ---------------------------------------------------------------------------
# module ops


def eval_pair(nl: Nonlinearity, xi):
    """Evaluate (g(xi), G(xi)) together."""
    return nl.g(xi), nl.G(xi)


def _lattice(signed=True):
    grid = np.geomspace(LATTICE_LO, LATTICE_HI, LATTICE_PTS // (2 if signed else 1))
    if signed:
        return np.concatenate([-grid[::-1], grid])
    return grid


def lambda0(nl: Nonlinearity) -> float:
    """log(2 sup G(xi)/xi^2), the supremum taken over xi != 0.

    Returns math.inf when the supremum diverges. Raises
    ConditionViolationError('g4') when G <= 0 everywhere (no admissible
    amplitude exists) and TailUndeterminedError for tabulated models whose
    growth past the table cannot be decided.
    """
    large = nl.large_behavior()
    if large is None:
        if isinstance(nl, Tabulated):
            raise TailUndeterminedError(
                f"{nl.label()}: tail growth undetermined beyond the table"
            )
        raise TailUndeterminedError(f"{nl.label()}: tail growth undetermined")
    q_inf, c_inf = large
    if c_inf > 0 and q_inf > 1:
        return math.inf

    xs = _lattice(signed=not nl.odd)
    ratios = nl.G(xs) / xs**2
    sup = float(np.max(ratios))
    # tail limit for exactly asymptotically-linear g (G/xi^2 -> c/2)
    if c_inf > 0 and q_inf == 1:
        sup = max(sup, c_inf / 2.0)
    if sup <= 0:
        raise ConditionViolationError(
            "g4", f"{nl.label()}: sup G/xi^2 = {sup:g} <= 0, no positive potential"
        )
    # local refinement around the lattice argmax
    i = int(np.argmax(ratios))
    lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, len(xs) - 1)]
    if lo < hi and math.copysign(1, lo) == math.copysign(1, hi):
        from scipy.optimize import minimize_scalar

        res = minimize_scalar(
            lambda t: -nl.G(t) / t**2, bounds=(lo, hi), method="bounded",
            options={"xatol": 1e-12 * (abs(hi) + 1)},
        )
        sup = max(sup, float(-res.fun))
    return math.log(2.0 * sup)


def envelope_constant(nl: Nonlinearity, delta: float) -> float:
    """Smallest C (inflated by a 1.05 safety factor) with
    xi*g(xi) <= C xi^2 + delta |xi|^(p+1) on the verification lattice.

    Raises ConditionViolationError when no finite C can work (growth at
    infinity at or above the critical power with too much weight for delta).
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    p = nl.p
    large = nl.large_behavior()
    if large is not None:
        q_inf, c_inf = large
        if c_inf > 0 and (q_inf > p or (q_inf == p and c_inf > delta)):
            raise ConditionViolationError(
                "g3",
                f"{nl.label()}: xi*g grows like |xi|^{q_inf + 1:g} at infinity; "
                f"C xi^2 + {delta:g}|xi|^{p + 1:g} cannot dominate",
            )
    elif isinstance(nl, Tabulated):
        raise TailUndeterminedError(
            f"{nl.label()}: cannot certify an envelope without tail information"
        )
    xs = _lattice(signed=not nl.odd)

    def shortfall(t):
        return (t * nl.g(t) - delta * abs(t) ** (p + 1.0)) / t**2

    needed = shortfall(xs)
    c_opt = max(0.0, float(np.max(needed)))
    # local refinement around the lattice argmax
    i = int(np.argmax(needed))
    lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, len(xs) - 1)]
    if lo < hi and math.copysign(1, lo) == math.copysign(1, hi):
        from scipy.optimize import minimize_scalar

        res = minimize_scalar(
            lambda t: -shortfall(t), bounds=(lo, hi), method="bounded",
            options={"xatol": 1e-12 * (abs(hi) + 1)},
        )
        c_opt = max(c_opt, float(-res.fun))
    return ENVELOPE_SAFETY * c_opt


@dataclass
class ConditionReport:
    """Screening outcome; entries are 'pass'/'fail'/'inconclusive'
    for g1..g5 and 'holds'/'fails'/'undetermined' for the two mutually
    exclusive small-amplitude regimes: origin_dominates_critical means
    g(xi)/(|xi|^(p-1) xi) diverges to +infinity from both sides as xi -> 0,
    origin_bounded_by_critical means |g(xi)| = O(|xi|^p) near 0."""

    g1: str
    g2: str
    g3: str
    g4: str
    g5: str
    origin_dominates_critical: str
    origin_bounded_by_critical: str
    notes: list = field(default_factory=list)

    def all_structural_pass(self) -> bool:
        return all(v == "pass" for v in (self.g1, self.g2, self.g3, self.g4, self.g5))


def classify(nl: Nonlinearity) -> ConditionReport:
    """Screen nl against the structural conditions and the two
    small-amplitude regimes (which are mutually exclusive by construction)."""
    notes = []
    p = nl.p

    g1 = "pass"  # every model here evaluates continuously on finite input

    small = nl.small_behavior()
    if small is None:
        g2 = "inconclusive"
        notes.append("small-amplitude behavior not determined")
    else:
        q0, c0 = small
        g2 = "pass" if q0 > 1 else "fail"

    large = nl.large_behavior()
    if large is None:
        g3 = "inconclusive"
        notes.append("tail behavior undetermined; subcriticality not certified")
    else:
        q_inf, c_inf = large
        g3 = "pass" if (q_inf < p or c_inf == 0) else "fail"
        if g3 == "fail":
            notes.append(
                f"growth exponent {q_inf:g} at infinity >= critical {p:g}"
            )

    # g4: a point of positive potential; tabulated models are scanned only
    # inside the table so the flat extension cannot fabricate potential
    if isinstance(nl, Tabulated):
        xs = np.linspace(nl.xi[0], nl.xi[-1], 4096)
        xs = xs[xs != 0.0]
    else:
        xs = _lattice(signed=not nl.odd)
    g4 = "pass" if float(np.max(nl.G(xs))) > 0 else "fail"

    g5 = "pass" if nl.odd else "fail"

    if small is None:
        origin_dominates_critical = "undetermined"
        origin_bounded_by_critical = "undetermined"
    else:
        q0, c0 = small
        if q0 >= p:
            # bounded against |xi|^p near zero regardless of sign or parity
            origin_dominates_critical, origin_bounded_by_critical = "fails", "holds"
        elif c0 > 0 and _leading_odd(nl):
            # genuinely superlinear-divergent from both sides
            origin_dominates_critical, origin_bounded_by_critical = "holds", "fails"
        else:
            origin_dominates_critical, origin_bounded_by_critical = "fails", "fails"
            notes.append(
                "small-amplitude leading term not positively odd; "
                "two-sided divergence fails"
            )

    return ConditionReport(g1, g2, g3, g4, g5, origin_dominates_critical, origin_bounded_by_critical, notes)


def _leading_odd(nl) -> bool:
    """Whether the leading small-amplitude term of g is odd with the sign of xi."""
    if isinstance(nl, CombinedPower):
        return nl.terms[0][2] == "odd"
    if isinstance(nl, Tabulated):
        hi = min(abs(nl.xi[0]), nl.xi[-1])
        if hi <= 0:
            return False
        ts = np.geomspace(hi * 1e-4, hi * 1e-2, 16)
        gp, gm = nl.g(ts), nl.g(-ts)
        scale = np.max(np.abs(gp)) + 1e-300
        return bool(np.max(np.abs(gp + gm)) <= 1e-6 * scale)
    return nl.odd
