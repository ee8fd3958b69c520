"""Artifact writing: atomic CSV/JSON, hashing, a run manifest, and figures.

CSV and JSON are the authoritative artifacts: they are written atomically
(temp file in the same directory, then rename), formatted deterministically
(%.17g floats, sorted JSON keys), and their SHA-256 digests are recorded in
the run manifest.  Figures are rendered beside them for human eyes and are
deliberately excluded from the determinism contract.
"""

from __future__ import annotations

import hashlib
import json
import os
import platform
import tempfile

import numpy as np

__all__ = [
    "write_text",
    "write_csv",
    "write_json",
    "sha256_file",
    "write_manifest",
    "fig_profile",
    "fig_curve",
    "fig_string",
    "fig_flow_trace",
    "fig_claims",
]


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % float(value)
    return str(value)


def write_text(path, text: str) -> None:
    """Atomic write: temp file in the target directory, then rename."""
    path = os.fspath(path)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fd, tmp = tempfile.mkstemp(
        dir=os.path.dirname(path) or ".", prefix=".tmp-", text=True
    )
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows) -> None:
    lines = [",".join(str(h) for h in header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    write_text(path, "\n".join(lines) + "\n")


def _json_ready(obj):
    if isinstance(obj, dict):
        return {str(k): _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [_json_ready(v) for v in obj.tolist()]
    if isinstance(obj, float) and (obj != obj):  # NaN -> null
        return None
    return obj


def write_json(path, obj) -> None:
    write_text(
        path,
        json.dumps(_json_ready(obj), sort_keys=True, indent=2) + "\n",
    )


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, config_data, artifacts, claims=None) -> str:
    """Record the config hash, library versions, artifact digests, and any
    per-claim outcomes; returns the manifest path."""
    import scipy

    cfg_text = json.dumps(_json_ready(config_data), sort_keys=True)
    manifest = {
        "config_sha256": hashlib.sha256(cfg_text.encode()).hexdigest(),
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "artifacts": {
            os.path.basename(p): sha256_file(p) for p in sorted(artifacts)
        },
    }
    if claims is not None:
        manifest["claims"] = {
            c["claim"]: c["status"] for c in claims
        }
    path = os.path.join(out_dir, "manifest.json")
    write_json(path, manifest)
    return path


# ---------------------------------------------------------------------------
# figures (matplotlib is imported lazily so the library core never needs it)


def _ax(title, xlabel, ylabel):
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=120)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path)
    import matplotlib.pyplot as plt

    plt.close(fig)
    return path


def fig_profile(path, profile, title="radial profile"):
    fig, ax = _ax(title, "r", "u(r)")
    ax.plot(profile.grid.r, profile.u, lw=1.5)
    ax.axhline(0.0, color="k", lw=0.5)
    return _save(fig, path)


def fig_curve(path, xs, ys, title, xlabel, ylabel, marker="o"):
    fig, ax = _ax(title, xlabel, ylabel)
    ax.plot(xs, ys, marker=marker, ms=3.5, lw=1.2)
    return _save(fig, path)


def fig_string(path, energies, title="elastic-string energies"):
    fig, ax = _ax(title, "node index", "energy")
    idx = np.arange(len(energies))
    ax.plot(idx, energies, marker="o", ms=3.5, lw=1.2)
    j = int(np.argmax(energies))
    ax.plot([j], [energies[j]], marker="*", ms=12, color="crimson")
    return _save(fig, path)


def fig_flow_trace(path, trace, title="descent flow"):
    fig, ax = _ax(title, "step", "J")
    steps = [row[0] for row in trace]
    ax.plot(steps, [row[3] for row in trace], lw=1.5, label="J")
    ax2 = ax.twinx()
    ax2.semilogy(
        steps,
        [max(row[5], 1e-300) for row in trace],
        lw=1.0,
        color="darkorange",
        label="gradient norm",
    )
    ax2.set_ylabel("gradient dual norm")
    return _save(fig, path)


def fig_claims(path, claims, title="identity claims"):
    fig, ax = _ax(title, "", "")
    names = [c["claim"] for c in claims]
    ax.set_xlim(0, 1)
    ax.set_ylim(-0.5, len(names) - 0.5)
    ax.set_yticks(range(len(names)))
    ax.set_yticklabels(names, fontsize=7)
    ax.set_xticks([])
    for i, c in enumerate(claims):
        ok = c["status"] == "pass"
        ax.barh(
            i, 1.0, color="#2e7d32" if ok else "#c62828", alpha=0.75
        )
        ax.text(
            0.5, i, c["status"], ha="center", va="center",
            color="white", fontsize=8,
        )
    ax.invert_yaxis()
    return _save(fig, path)
