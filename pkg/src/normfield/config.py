"""Run configuration: YAML files with an include mechanism.

A config file may name another file under ``include:`` (string or list);
included files are loaded first and the including file's keys win,
merging nested mappings key by key.  Validation failures raise ConfigError
carrying the dotted field name so the CLI can point at the exact key.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import yaml

from .errors import ConfigError
from .nonlin import CombinedPower, PurePower, Saturating, Tabulated

__all__ = ["RunConfig", "load_config", "parse_config", "build_nonlinearity"]

_KINDS = ("PurePower", "CombinedPower", "Saturating", "Tabulated")


def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, val in override.items():
        if (
            key in out
            and isinstance(out[key], dict)
            and isinstance(val, dict)
        ):
            out[key] = _deep_merge(out[key], val)
        else:
            out[key] = val
    return out


def _load_yaml(path, stack):
    real = os.path.realpath(path)
    if real in stack:
        raise ConfigError("include", f"circular include via {path}")
    if not os.path.exists(path):
        raise ConfigError("include", f"no such file: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = yaml.safe_load(fh) or {}
        except yaml.YAMLError as exc:
            raise ConfigError("<file>", f"{path}: not valid YAML ({exc})")
    if not isinstance(data, dict):
        raise ConfigError("<file>", f"{path}: top level must be a mapping")
    includes = data.pop("include", None)
    if includes is None:
        return data
    if isinstance(includes, str):
        includes = [includes]
    if not isinstance(includes, list):
        raise ConfigError("include", "must be a path or list of paths")
    merged: dict = {}
    base_dir = os.path.dirname(path)
    for inc in includes:
        inc_path = inc if os.path.isabs(inc) else os.path.join(base_dir, inc)
        merged = _deep_merge(merged, _load_yaml(inc_path, stack + (real,)))
    return _deep_merge(merged, data)


def _need(data, key, kind, fieldname, default=None, required=False):
    if key not in data:
        if required:
            raise ConfigError(fieldname, "is required")
        return default
    val = data[key]
    if kind is float:
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigError(fieldname, f"must be a number, got {val!r}")
        return float(val)
    if kind is int:
        if isinstance(val, bool) or not isinstance(val, int):
            raise ConfigError(fieldname, f"must be an integer, got {val!r}")
        return int(val)
    if kind is str:
        if not isinstance(val, str):
            raise ConfigError(fieldname, f"must be a string, got {val!r}")
        return val
    if kind is dict:
        if not isinstance(val, dict):
            raise ConfigError(fieldname, f"must be a mapping, got {val!r}")
        return val
    raise AssertionError(kind)


def build_nonlinearity(mapping: dict, N: int):
    """Construct the nonlinearity named by a config mapping."""
    if not isinstance(mapping, dict):
        raise ConfigError("nonlinearity", "must be a mapping with a 'kind'")
    kind = mapping.get("kind")
    if kind not in _KINDS:
        raise ConfigError(
            "nonlinearity.kind", f"must be one of {_KINDS}, got {kind!r}"
        )
    try:
        if kind == "PurePower":
            return PurePower(
                q=_need(mapping, "q", float, "nonlinearity.q", required=True),
                N=N,
            )
        if kind == "Saturating":
            return Saturating(
                q=_need(mapping, "q", float, "nonlinearity.q", required=True),
                s=_need(mapping, "s", float, "nonlinearity.s", required=True),
                N=N,
            )
        if kind == "CombinedPower":
            terms = mapping.get("terms")
            if not isinstance(terms, list) or not terms:
                raise ConfigError(
                    "nonlinearity.terms", "must be a nonempty list"
                )
            return CombinedPower(
                terms=tuple(tuple(t) for t in terms), N=N
            )
        path = _need(mapping, "file", str, "nonlinearity.file", required=True)
        return Tabulated.from_file(path, N=N)
    except ConfigError:
        raise
    except (ValueError, OSError) as exc:
        raise ConfigError("nonlinearity", str(exc))


@dataclass
class RunConfig:
    """Validated configuration shared by every CLI command."""

    nonlinearity: object
    N: int = 2
    grid_n: int = 2051
    grid_r0: float = 18.0
    grading: float = 2.5
    tol_ode: float = 1e-10
    tol_newton: float = 1e-11
    tol_pohozaev: float = 1e-6
    tol_mass: float = 1e-9
    window: tuple = (-6.0, -0.5)
    samples: int = 9
    nodes: int = 0
    lam: float = -1.0
    m: float | None = None
    m_grid: tuple | None = None
    method: str = "BranchRootFind"
    string_rtol: float = 1e-3
    delta: float = 1.0
    seed: int = 0
    threads: int = 1
    out: str = "out"
    flow: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False)


def parse_config(data: dict) -> RunConfig:
    """Validate a merged config mapping into a RunConfig."""
    N = _need(data, "N", int, "N", default=2)
    if N < 1:
        raise ConfigError("N", f"must be a positive integer, got {N}")
    nl = build_nonlinearity(
        _need(data, "nonlinearity", dict, "nonlinearity", required=True), N
    )

    grid = _need(data, "grid", dict, "grid", default={})
    grid_n = _need(grid, "n", int, "grid.n", default=2051)
    if grid_n < 16:
        raise ConfigError("grid.n", f"must be at least 16, got {grid_n}")
    grid_r0 = _need(grid, "r0", float, "grid.r0", default=18.0)
    if grid_r0 <= 0:
        raise ConfigError("grid.r0", f"must be positive, got {grid_r0}")
    grading = _need(grid, "grading", float, "grid.grading", default=2.5)
    if grading < 0:
        raise ConfigError("grid.grading", "must be nonnegative")

    tols = _need(data, "tolerances", dict, "tolerances", default={})
    tol_vals = {}
    for name, dflt in (
        ("ode", 1e-10),
        ("newton", 1e-11),
        ("pohozaev", 1e-6),
        ("mass", 1e-9),
    ):
        v = _need(tols, name, float, f"tolerances.{name}", default=dflt)
        if not v > 0:
            raise ConfigError(
                f"tolerances.{name}", f"must be positive, got {v}"
            )
        tol_vals[name] = v

    window = data.get("window", (-6.0, -0.5))
    if (
        not isinstance(window, (list, tuple))
        or len(window) != 2
        or any(
            isinstance(x, bool) or not isinstance(x, (int, float))
            for x in window
        )
    ):
        raise ConfigError("window", f"must be [lo, hi], got {window!r}")
    lo, hi = float(window[0]), float(window[1])
    if not lo < hi:
        raise ConfigError("window", f"needs lo < hi, got [{lo:g}, {hi:g}]")

    samples = _need(data, "samples", int, "samples", default=9)
    if samples < 2:
        raise ConfigError("samples", f"must be at least 2, got {samples}")
    nodes = _need(data, "nodes", int, "nodes", default=0)
    if nodes < 0:
        raise ConfigError("nodes", "must be nonnegative")
    lam = _need(data, "lambda", float, "lambda", default=-1.0)
    if not math.isfinite(lam):
        raise ConfigError("lambda", "must be finite")

    m = _need(data, "m", float, "m", default=None)
    if m is not None and m <= 0:
        raise ConfigError("m", f"must be positive, got {m}")
    m_grid = data.get("m_grid")
    if m_grid is not None:
        if not isinstance(m_grid, (list, tuple)) or not m_grid:
            raise ConfigError("m_grid", "must be a nonempty list")
        for x in m_grid:
            if isinstance(x, bool) or not isinstance(x, (int, float)) or x <= 0:
                raise ConfigError("m_grid", f"entries must be positive, got {x!r}")
        m_grid = tuple(float(x) for x in m_grid)

    method = _need(data, "method", str, "method", default="BranchRootFind")
    if method not in ("BranchRootFind", "DeformFlow", "SphereMinimize"):
        raise ConfigError("method", f"unknown method {method!r}")

    string_rtol = _need(
        data, "string_rtol", float, "string_rtol", default=1e-3
    )
    if not string_rtol > 0:
        raise ConfigError("string_rtol", "must be positive")
    delta = _need(data, "delta", float, "delta", default=1.0)
    if not delta > 0:
        raise ConfigError("delta", "must be positive")

    seed = _need(data, "seed", int, "seed", default=0)
    threads = _need(data, "threads", int, "threads", default=1)
    if threads < 1:
        raise ConfigError("threads", f"must be at least 1, got {threads}")
    out = _need(data, "out", str, "out", default="out")

    flow = _need(data, "flow", dict, "flow", default={})
    flow_cfg = {}
    for name, dflt in (
        ("amplitude", 1.8),
        ("width", 1.0),
        ("theta", 0.0),
        ("eps_bar", 0.5),
        ("radius", 3.0),
        ("jitter", 0.0),
    ):
        v = _need(flow, name, float, f"flow.{name}", default=dflt)
        flow_cfg[name] = v
    for name in ("eps_bar", "radius", "amplitude", "width"):
        if not flow_cfg[name] > 0:
            raise ConfigError(f"flow.{name}", "must be positive")
    if flow_cfg["jitter"] < 0:
        raise ConfigError("flow.jitter", "must be nonnegative")
    flow_cfg["steps"] = _need(flow, "steps", int, "flow.steps", default=200)
    if flow_cfg["steps"] < 1:
        raise ConfigError("flow.steps", "must be at least 1")
    if "b" in flow:
        flow_cfg["b"] = _need(flow, "b", float, "flow.b")

    return RunConfig(
        nonlinearity=nl,
        N=N,
        grid_n=grid_n,
        grid_r0=grid_r0,
        grading=grading,
        tol_ode=tol_vals["ode"],
        tol_newton=tol_vals["newton"],
        tol_pohozaev=tol_vals["pohozaev"],
        tol_mass=tol_vals["mass"],
        window=(lo, hi),
        samples=samples,
        nodes=nodes,
        lam=lam,
        m=m,
        m_grid=m_grid,
        method=method,
        string_rtol=string_rtol,
        delta=delta,
        seed=seed,
        threads=threads,
        out=out,
        flow=flow_cfg,
        raw=data,
    )


def load_config(path) -> RunConfig:
    """Load, merge includes, and validate a YAML config file."""
    return parse_config(_load_yaml(path, ()))
