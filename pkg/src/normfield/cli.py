"""Configuration-driven command surface.

Every command reads one YAML config (see normfield.config), writes CSV/JSON
artifacts plus rendered figures into the output directory, and records a
manifest with the config hash, library versions, and artifact digests.

Exit codes: 0 success, 2 config error, 3 numerical failure,
4 claim-verification failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import mass as mass_mod
from . import minimax as minimax_mod
from . import nonlin as nonlin_mod
from . import report
from .config import load_config
from .energy import AugmentedPoint, energies
from .errors import ConfigError, NormfieldError
from .grid import Profile, grid_for_mu
from .shoot import BranchSample, find_bound_state

PROFILE_COLUMNS = "r,u"

_COMMANDS = (
    "classify",
    "ground-state",
    "branch",
    "mp-level",
    "thresholds",
    "solve",
    "minimize",
    "verify",
    "flow",
)

_CSV_DOCS = {
    "ground-state": ",".join(BranchSample.CSV_HEADER),
    "branch": ",".join(BranchSample.CSV_HEADER),
    "thresholds": ",".join(mass_mod.ThresholdCurve.CSV_HEADER),
    "flow": ",".join(minimax_mod.FLOW_TRACE_HEADER),
}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="normfield",
        description=(
            "Radial bound states with prescribed mass: branches, "
            "mountain-pass levels, thresholds, and identity verification."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "classify": "screen the nonlinearity against the structural "
        "conditions and compute its derived constants",
        "ground-state": "one bound state at a fixed multiplier",
        "branch": "bound states across the multiplier window",
        "mp-level": "mountain-pass level by both routes at one multiplier",
        "thresholds": "threshold curve and mass threshold over the window",
        "solve": "solve the mass-constrained problem",
        "minimize": "direct minimization on the mass sphere",
        "verify": "cross-check the headline identities (exit 4 on failure)",
        "flow": "localized descent flow from a configured start",
    }
    for name in _COMMANDS:
        epilog = None
        if name in _CSV_DOCS:
            epilog = f"CSV columns: {_CSV_DOCS[name]}"
        elif name == "minimize":
            epilog = (
                f"profile CSV columns: {PROFILE_COLUMNS}; with m_grid, "
                "minimize_grid.csv columns: mass,level,status,lambda_star"
            )
        elif name in ("ground-state", "solve"):
            epilog = f"profile CSV columns: {PROFILE_COLUMNS}"
        p = sub.add_parser(name, help=helps[name], epilog=epilog)
        p.add_argument("--config", required=True, help="YAML config path")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--seed", type=int, help="seed (overrides config)")
        p.add_argument(
            "--threads", type=int, help="worker threads (overrides config)"
        )
        p.add_argument("--verbose", action="store_true")
        p.add_argument(
            "--no-figures",
            action="store_true",
            help="skip figure rendering (CSV/JSON only)",
        )
    return parser


def _say(args, msg):
    if args.verbose:
        print(msg, file=sys.stderr)


def _require_m(cfg):
    if cfg.m is None:
        raise ConfigError("m", "is required for this command")
    return cfg.m


def _write_profile(out, name, profile):
    path = os.path.join(out, name)
    report.write_csv(
        path, ("r", "u"), np.column_stack([profile.grid.r, profile.u])
    )
    return path


# ---------------------------------------------------------------------------
# command bodies: each returns (artifact paths, figure paths, claims or None)


def _cmd_classify(cfg, out, figures, args):
    nl = cfg.nonlinearity
    rep = nonlin_mod.classify(nl)
    lam0 = nonlin_mod.lambda0(nl)
    body = {
        "nonlinearity": repr(nl),
        "N": cfg.N,
        "conditions": dataclasses.asdict(rep),
        "lambda0": "inf" if math.isinf(lam0) else lam0,
        "critical_exponent": nl.p,
    }
    try:
        body["envelope_constant"] = nonlin_mod.envelope_constant(
            nl, cfg.delta
        )
        body["envelope_delta"] = cfg.delta
    except NormfieldError as exc:
        body["envelope_constant"] = None
        body["envelope_error"] = str(exc)
    path = os.path.join(out, "classify.json")
    report.write_json(path, body)
    return [path], [], None


def _cmd_ground_state(cfg, out, figures, args):
    nl = cfg.nonlinearity
    samp = find_bound_state(
        nl, cfg.lam, cfg.nodes, n=cfg.grid_n, r0=cfg.grid_r0,
        tol=cfg.tol_pohozaev,
    )
    csv_path = os.path.join(out, "ground_state.csv")
    report.write_csv(csv_path, BranchSample.CSV_HEADER, [samp.csv_row()])
    prof_path = _write_profile(out, "profile.csv", samp.profile)
    figs = []
    if figures:
        figs.append(report.fig_profile(
            os.path.join(out, "profile.png"), samp.profile,
            title=f"{cfg.nodes}-node state, multiplier exp({cfg.lam:g})",
        ))
    return [csv_path, prof_path], figs, None


def _cmd_branch(cfg, out, figures, args):
    nl = cfg.nonlinearity
    lams = np.linspace(cfg.window[0], cfg.window[1], cfg.samples)

    def one(lam):
        return find_bound_state(
            nl, float(lam), cfg.nodes, n=cfg.grid_n, r0=cfg.grid_r0,
            tol=cfg.tol_pohozaev,
        )

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            samples = list(pool.map(one, lams))
    else:
        samples = [one(lam) for lam in lams]
    csv_path = os.path.join(out, "branch.csv")
    report.write_csv(
        csv_path, BranchSample.CSV_HEADER, [s.csv_row() for s in samples]
    )
    figs = []
    if figures:
        figs.append(report.fig_curve(
            os.path.join(out, "branch.png"),
            [s.lam for s in samples], [s.Ihat for s in samples],
            f"{cfg.nodes}-node branch", "lambda", "level",
        ))
    return [csv_path], figs, None


def _cmd_mp_level(cfg, out, figures, args):
    nl = cfg.nonlinearity
    _say(args, "route one: least-energy bound state")
    by_state = minimax_mod.mp_level_least_energy(
        nl, cfg.lam, n=cfg.grid_n, r0=cfg.grid_r0, tol=cfg.tol_pohozaev
    )
    _say(args, "route two: elastic string")
    path_res = minimax_mod.mp_level_path(
        nl, cfg.lam, rtol=cfg.string_rtol
    )
    gap = abs(path_res.level - by_state) / max(abs(by_state), 1e-300)
    body = {
        "lambda": cfg.lam,
        "level_least_energy": by_state,
        "level_path": path_res.level,
        "relative_gap": gap,
        "string_sweeps": path_res.sweeps,
        "string_converged": path_res.converged,
        "climb_converged": path_res.climb_converged,
    }
    path = os.path.join(out, "mp_level.json")
    report.write_json(path, body)
    figs = []
    if figures:
        figs.append(report.fig_string(
            os.path.join(out, "string.png"), path_res.energies,
            title=f"string energies at lambda={cfg.lam:g}",
        ))
    return [path], figs, None


def _cmd_thresholds(cfg, out, figures, args):
    nl = cfg.nonlinearity
    curve = mass_mod.threshold_curve(
        nl, cfg.nodes, window=cfg.window, samples=cfg.samples,
        n=cfg.grid_n, r0=cfg.grid_r0, threads=cfg.threads,
    )
    csv_path = os.path.join(out, "thresholds.csv")
    report.write_csv(csv_path, curve.CSV_HEADER, curve.csv_rows())
    body = {
        "k": curve.k,
        "m_k": curve.m_k,
        "window": list(curve.window),
        "inf_location": curve.inf_location
        if isinstance(curve.inf_location, str)
        else float(curve.inf_location),
        "gaps": [[lam, msg] for lam, msg in curve.gaps],
    }
    json_path = os.path.join(out, "thresholds.json")
    report.write_json(json_path, body)
    figs = []
    if figures:
        figs.append(report.fig_curve(
            os.path.join(out, "thresholds.png"),
            [r[0] for r in curve.samples], [r[2] for r in curve.samples],
            f"level/multiplier ratio, k={curve.k}", "lambda", "ratio",
        ))
    return [csv_path, json_path], figs, None


def _cmd_solve(cfg, out, figures, args):
    nl = cfg.nonlinearity
    m = _require_m(cfg)
    rep = mass_mod.solve_normalized(
        nl, m, cfg.method, window=cfg.window, samples=cfg.samples,
        n=cfg.grid_n, r0=cfg.grid_r0, tol=cfg.tol_pohozaev,
    )
    path = os.path.join(out, "solve.json")
    report.write_json(path, rep.to_dict())
    arts = [path]
    figs = []
    if rep.u is not None:
        arts.append(_write_profile(out, "profile.csv", rep.u))
        if figures:
            figs.append(report.fig_profile(
                os.path.join(out, "profile.png"), rep.u,
                title=f"constrained solution, mass {m:g} ({rep.method})",
            ))
    return arts, figs, None


def _cmd_minimize(cfg, out, figures, args):
    nl = cfg.nonlinearity
    if cfg.m is None and cfg.m_grid:
        # sweep the mass grid and tabulate level/multiplier per mass
        reps = [
            mass_mod.minimize_on_sphere(nl, mm, n=cfg.grid_n, r0=cfg.grid_r0)
            for mm in cfg.m_grid
        ]
        csv_path = os.path.join(out, "minimize_grid.csv")
        report.write_csv(
            csv_path,
            ("mass", "level", "status", "lambda_star"),
            [
                (r.mass, r.I, r.status,
                 math.nan if r.lam_star is None else r.lam_star)
                for r in reps
            ],
        )
        json_path = os.path.join(out, "minimize.json")
        report.write_json(json_path, [r.to_dict() for r in reps])
        figs = []
        if figures:
            figs.append(report.fig_curve(
                os.path.join(out, "minimize_grid.png"),
                [r.mass for r in reps], [r.I for r in reps],
                "constrained level over the mass grid", "mass", "level",
            ))
        return [csv_path, json_path], figs, None
    m = _require_m(cfg)
    rep = mass_mod.minimize_on_sphere(
        nl, m, n=cfg.grid_n, r0=cfg.grid_r0
    )
    path = os.path.join(out, "minimize.json")
    report.write_json(path, rep.to_dict())
    arts = [path]
    figs = []
    if rep.u is not None:
        arts.append(_write_profile(out, "profile.csv", rep.u))
        if figures:
            figs.append(report.fig_profile(
                os.path.join(out, "profile.png"), rep.u,
                title=f"sphere minimizer, mass {m:g} [{rep.status}]",
            ))
    return arts, figs, None


def _cmd_verify(cfg, out, figures, args):
    nl = cfg.nonlinearity
    m = _require_m(cfg)
    body = mass_mod.verify_identities(
        nl, m, window=cfg.window, samples=cfg.samples,
        n=cfg.grid_n, r0=cfg.grid_r0, threads=cfg.threads,
    )
    path = os.path.join(out, "verify.json")
    report.write_json(path, body)
    figs = []
    if figures:
        figs.append(report.fig_claims(
            os.path.join(out, "claims.png"), body["claims"]
        ))
    return [path], figs, body["claims"]


def _cmd_flow(cfg, out, figures, args):
    nl = cfg.nonlinearity
    fl = cfg.flow
    grid = grid_for_mu(
        cfg.N, math.exp(cfg.lam), cfg.grid_n, cfg.grid_r0
    )
    shape = np.exp(-((grid.r / fl["width"]) ** 2) / 2.0)
    u = fl["amplitude"] * shape
    if fl["jitter"] > 0:
        rng = np.random.default_rng(cfg.seed)
        u = u + fl["jitter"] * rng.standard_normal(grid.n) * shape
    pt = AugmentedPoint(fl["theta"], cfg.lam, Profile(grid, u))
    m = cfg.m if cfg.m is not None else grid.integrate(u * u)
    b = fl.get("b")
    if b is None:
        b = energies(pt, nl, m).J
    res = minimax_mod.deform(
        pt, nl, m, b=b, eps_bar=fl["eps_bar"], radius=fl["radius"],
        max_steps=fl["steps"],
    )
    csv_path = os.path.join(out, "flow.csv")
    report.write_csv(csv_path, minimax_mod.FLOW_TRACE_HEADER, res.trace)
    body = {
        "reason": res.reason,
        "steps": res.steps,
        "path_length": res.path_length,
        "band_center": b,
        "final": {
            "theta": res.point.theta,
            "lambda": res.point.lam,
            "J": res.J_values[-1],
        },
    }
    json_path = os.path.join(out, "flow.json")
    report.write_json(json_path, body)
    figs = []
    if figures:
        figs.append(report.fig_flow_trace(
            os.path.join(out, "flow.png"), res.trace,
            title=f"descent flow [{res.reason}]",
        ))
    return [csv_path, json_path], figs, None


_BODIES = {
    "classify": _cmd_classify,
    "ground-state": _cmd_ground_state,
    "branch": _cmd_branch,
    "mp-level": _cmd_mp_level,
    "thresholds": _cmd_thresholds,
    "solve": _cmd_solve,
    "minimize": _cmd_minimize,
    "verify": _cmd_verify,
    "flow": _cmd_flow,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.out is not None:
            cfg = dataclasses.replace(cfg, out=args.out)
        if args.seed is not None:
            cfg = dataclasses.replace(cfg, seed=args.seed)
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError("threads", "must be at least 1")
            cfg = dataclasses.replace(cfg, threads=args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    out = cfg.out
    os.makedirs(out, exist_ok=True)
    figures = not args.no_figures
    try:
        arts, figs, claims = _BODIES[args.command](cfg, out, figures, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NormfieldError, ValueError) as exc:
        # ValueError covers feasibility failures from the shooting layer
        # (e.g. a multiplier at or beyond the positivity boundary).
        print(
            f"numerical failure in '{args.command}': "
            f"{type(exc).__name__}: {exc}",
            file=sys.stderr,
        )
        return 3

    manifest = report.write_manifest(out, cfg.raw, arts, claims=claims)
    _say(args, f"wrote {len(arts)} artifacts, {len(figs)} figures")
    _say(args, f"manifest: {manifest}")
    if claims is not None and any(
        c["status"] != "pass" for c in claims
    ):
        failed = [c["claim"] for c in claims if c["status"] != "pass"]
        print(
            "claim verification failed: " + ", ".join(failed),
            file=sys.stderr,
        )
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
