"""Static figures for the report command.  Everything renders to files through Agg."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    # fixed metadata keeps repeated renders byte-identical
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_profile(profile, path) -> Path:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax1.plot(profile.s_grid, profile.sigma, label="sigma")
    ax1.plot(profile.s_grid, profile.dsigma, label="sigma'")
    ax1.set_xlabel("s")
    ax1.legend()
    r = 0.5 * abs(profile.tau) * np.exp(profile.sigma)
    z = 0.5 * profile.kappa
    ax2.plot(z, r, "k")
    ax2.plot(z, -r, "k")
    ax2.set_aspect("equal")
    ax2.set_xlabel("axial")
    ax2.set_ylabel("radius")
    ax1.set_title(f"profile, tau = {profile.tau:g}")
    return _save(fig, path)


def plot_periods(taus, T, dT, path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(taus, T, "o-", ms=3, label="T")
    ax.plot(taus, dT, "s--", ms=3, label="dT/dtau")
    ax.axvline(0, color="0.7", lw=0.8)
    ax.set_xlabel("tau")
    ax.legend()
    return _save(fig, path)


def plot_indicial(rows, path) -> Path:
    """rows: iterable of (tau, j, gamma)."""
    rows = np.asarray(rows, dtype=float)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for j in np.unique(rows[:, 1]):
        sel = rows[:, 1] == j
        ax.plot(rows[sel, 0], rows[sel, 2], "o-", ms=3, label=f"j = {int(j)}")
    ax.set_xlabel("tau")
    ax.set_ylabel("gamma")
    ax.legend()
    return _save(fig, path)


def plot_decay(ns, series: dict, target_slope: float, path) -> Path:
    """Semilog decay of neck quantities against n, with the predicted slope."""
    ns = np.asarray(ns, dtype=float)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for name, vals in series.items():
        vals = np.asarray(vals, dtype=float)
        ax.semilogy(ns, vals, "o", ms=4, label=name)
        ref = np.exp(np.log(vals).mean() + target_slope * (ns - ns.mean()))
        ax.semilogy(ns, ref, "--", lw=0.8, color=ax.lines[-1].get_color())
    ax.set_xlabel("n")
    ax.set_title(f"predicted slope {target_slope:.4g}")
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_matching(taus, values, solutions, path) -> Path:
    """Lambda + n Gamma over the tau interval with the integer crossings marked."""
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(taus, values, "k")
    for sol in solutions:
        ax.plot(sol.tau, sol.m, "ro", ms=3)
    ax.set_xlabel("tau")
    ax.set_ylabel("Lambda + n Gamma")
    return _save(fig, path)
