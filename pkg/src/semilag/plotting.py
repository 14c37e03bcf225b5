"""Report figures written to disk (non-interactive Agg backend)."""
from __future__ import annotations

from pathlib import Path

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _finite(values):
    v = np.array([float(x) for x in values], dtype=float)
    return np.where(np.isfinite(v), v, np.nan)


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)


def plot_dual_history(dual, path, primal_value=None):
    """Best dual bound after each oracle call, with the primal value as a reference line."""
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    h = _finite(dual.history)
    if np.isfinite(h).any():
        ax.plot(np.arange(1, len(h) + 1), h, drawstyle="steps-post", lw=1.2, label="best dual bound")
    else:
        ax.text(0.5, 0.5, "dual is -inf at every probe", ha="center", va="center", transform=ax.transAxes)
    if primal_value is not None and np.isfinite(primal_value):
        ax.axhline(primal_value, color="k", ls="--", lw=0.8, label="primal value")
    ax.set_xlabel("oracle call")
    ax.set_ylabel("value")
    ax.set_title(f"dual maximization ({dual.termination})", fontsize=9)
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=8)
    return _save(fig, path)


def plot_image_set(qp, path, targets=(), samples=6000, R=3.0, seed=0):
    """Sampled image (g_0(x), f(x)) for a single-constraint instance, with query points."""
    if qp.m != 1:
        raise ValueError("image-set plot needs exactly one constraint")
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, R, size=(samples, qp.n))
    X[: samples // 4] *= rng.uniform(0, 1, size=(samples // 4, 1)) ** 2
    g = qp.constraints[0].values(X)
    f = qp.objective.values(X)
    fig, ax = plt.subplots(figsize=(4.5, 4))
    ax.scatter(g, f, s=2, alpha=0.35, lw=0, label="(g(x), f(x))")
    for t, verdict in targets:
        marker = "o" if verdict == "member" else ("x" if verdict == "non_member" else "s")
        ax.scatter([t[0]], [t[1]], marker=marker, s=40, color="C3")
        ax.annotate(verdict, (t[0], t[1]), fontsize=7, xytext=(4, 4), textcoords="offset points")
    ax.axhline(0, color="0.6", lw=0.5)
    ax.axvline(0, color="0.6", lw=0.5)
    ax.set_xlabel("constraint value")
    ax.set_ylabel("objective value")
    return _save(fig, path)


def plot_corpus(rows, path):
    """Per-instance runtime bars, colored by whether all checks passed."""
    names, secs, ok = [], [], []
    for r in rows:
        if r.instance not in names:
            names.append(r.instance)
            secs.append(0.0)
            ok.append(True)
        k = names.index(r.instance)
        secs[k] = max(secs[k], r.seconds)
        ok[k] = ok[k] and r.passed
    fig, ax = plt.subplots(figsize=(6, 0.3 * len(names) + 1.2))
    colors = ["C2" if o else "C3" for o in ok]
    ax.barh(names, np.maximum(secs, 1e-3), color=colors)
    ax.set_xscale("log")
    ax.set_xlabel("seconds (green: all checks pass)")
    ax.invert_yaxis()
    return _save(fig, path)
