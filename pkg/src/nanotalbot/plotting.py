"""Figure rendering for CLI reports.

matplotlib is imported lazily with the non-interactive Agg backend; the
physics modules never import this file.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np


def _plt():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _save(fig, path):
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    _plt().close(fig)
    return path


def plot_patterns(patterns, path):
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for pat in patterns:
        ax.plot(pat.z * 1e9, pat.values / pat.delta, label=pat.kind)
    ax.set_xlabel("z [nm]")
    ax.set_ylabel("P(z) / delta")
    ax.legend()
    return _save(fig, path)


def plot_scan_field(result, path, column="aleph_qc"):
    plt = _plt()
    data = result.field_array(column)
    fig, ax = plt.subplots(figsize=(5, 4))
    t1, t2 = np.asarray(result.grid.t1_values), np.asarray(result.grid.t2_values)
    mesh = ax.pcolormesh(t2, t1, data, shading="nearest")
    fig.colorbar(mesh, ax=ax, label=f"max over fluence of {column}")
    ax.set_xlabel("t2 [s]")
    ax.set_ylabel("t1 [s]")
    return _save(fig, path)


def plot_exclusion(curve, path, points=None):
    plt = _plt()
    fig, ax = plt.subplots(figsize=(5, 4))
    ok = np.isfinite(curve.lambda_min)
    ax.loglog(curve.r_c_values[ok], curve.lambda_min[ok], "o-", label="lambda_min")
    for label, (rc, lam) in (points or {}).items():
        ax.loglog([rc], [lam], "k*")
        ax.annotate(label, (rc, lam))
    ax.set_xlabel("r_c [m]")
    ax.set_ylabel("lambda_CSL [1/s]")
    ax.legend()
    return _save(fig, path)


def plot_bounds(r_c, curves, path):
    plt = _plt()
    fig, ax = plt.subplots(figsize=(5, 4))
    for label, lam in curves.items():
        ax.loglog(r_c, lam, label=label)
    ax.set_xlabel("r_c [m]")
    ax.set_ylabel("lambda_CSL [1/s]")
    ax.legend()
    return _save(fig, path)
