"""The four figure kinds: cross sections against the steady profile,
field heat maps, log-log convergence curves, and semilog decay plots.

Every function renders to a file and returns the numbers it annotated
(fitted slopes, point counts), so scripted checks can assert on them.
"""

from __future__ import annotations

import math
import warnings

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import matplotlib.tri as mtri
import numpy as np

from .readers import read_diagnostics, read_errors, read_snapshot


def steady_profile_section(x, s, d=2):
    """Cross section at x2 = 0 of the compactly supported steady profile."""
    k = (d * math.gamma(d / 2)
         / ((d + 2 * s) * 4**s * math.gamma(2 - s) * math.gamma(d / 2 + 1 - s)))
    return k * np.maximum(1.0 - np.asarray(x, dtype=float) ** 2, 0.0) ** s


def _grid_spacing(values):
    u = np.unique(np.round(values, 12))
    return float(np.min(np.diff(u))) if len(u) > 1 else 0.0


def plot_cross_section(snapshot_csv, out_path, y0=0.0, overlay_profile=False,
                       s=0.5, d=2, normalize=False):
    """Density along the line x2 = y0, optionally against the steady profile.

    Picks the nodes within half a grid spacing of the line; raises when the
    slice is empty.  ``normalize`` rescales the section to unit mass along
    the slice, matching a mass-normalized profile comparison.
    """
    snap = read_snapshot(snapshot_csv)
    spacing = _grid_spacing(snap["y"])
    mask = np.abs(snap["y"] - y0) <= spacing / 2 + 1e-12
    if not np.any(mask):
        raise ValueError(f"no nodes within half a spacing of x2 = {y0}")
    order = np.argsort(snap["x"][mask])
    x = snap["x"][mask][order]
    rho = snap["rho"][mask][order]
    if normalize and np.trapezoid(rho, x) > 0:
        rho = rho / np.trapezoid(rho, x)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(x, rho, lw=1.4, label="density")
    if overlay_profile:
        xx = np.linspace(x.min(), x.max(), 800)
        ax.plot(xx, steady_profile_section(xx, s, d), "k-", lw=1.0,
                label="steady profile")
    ax.set_xlabel("$x_1$")
    ax.set_ylabel(r"$\rho$")
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return {"points": int(mask.sum()), "out": str(out_path)}


def plot_heatmap(snapshot_csv, out_path, column="rho"):
    """Triangulated pseudocolor map of one snapshot column."""
    snap = read_snapshot(snapshot_csv)
    if column not in ("rho", "c"):
        raise ValueError(f"heatmap column must be 'rho' or 'c', got {column!r}")
    tri = mtri.Triangulation(snap["x"], snap["y"])
    fig, ax = plt.subplots(figsize=(5.0, 4.2))
    im = ax.tripcolor(tri, snap[column], shading="gouraud", cmap="viridis")
    fig.colorbar(im, ax=ax, label=column)
    ax.set_aspect("equal")
    ax.set_xlabel("$x_1$")
    ax.set_ylabel("$x_2$")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return {"points": len(snap["x"]), "out": str(out_path)}


def _fit_slope(x, y):
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def plot_convergence(errors_csv, out_path, mode="vs_h"):
    """Log-log error curves with least-squares slopes in the legend.

    ``vs_h`` plots error against h, one curve per time step; ``vs_dt``
    plots against dt, one curve per mesh.  Nonpositive errors are a
    schema-level failure (they cannot be placed on a log axis).
    """
    table = read_errors(errors_csv)
    if np.any(table["l2_error"] <= 0):
        raise ValueError("nonpositive errors cannot be drawn on a log-log plot")
    if mode == "vs_h":
        group_key, x_key = "dt", "h"
        xlabel = "$h$"
    elif mode == "vs_dt":
        group_key, x_key = "nx", "dt"
        xlabel = r"$\Delta t$"
    else:
        raise ValueError(f"mode must be 'vs_h' or 'vs_dt', got {mode!r}")
    fig, ax = plt.subplots(figsize=(6.0, 4.4))
    slopes = {}
    for g in sorted(set(table[group_key])):
        mask = table[group_key] == g
        x = table[x_key][mask]
        err = table["l2_error"][mask]
        order = np.argsort(x)
        x, err = x[order], err[order]
        if len(x) < 2:
            continue
        slope = _fit_slope(x, err)
        slopes[float(g)] = slope
        label = (f"{group_key}={g:g} (slope {slope:.2f})")
        ax.loglog(x, err, "o-", ms=4, lw=1.2, label=label)
    if not slopes:
        raise ValueError("need at least two points per curve to fit slopes")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(r"$L^2$ error vs reference")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return {"slopes": slopes, "out": str(out_path)}


def plot_decay(diag_csv, out_path, column="entropy", theoretical_rate=None):
    """Semilog decay of one diagnostics column, with an optional e^{-rate t}
    reference line anchored at the first positive value.

    Nonpositive values cannot be drawn on the log axis; they are skipped
    with a warning.  Returns the fitted exponential rate of the remaining
    tail half (slope of log value vs time).
    """
    table = read_diagnostics(diag_csv)
    if column not in ("entropy", "energy", "entropy_reg", "hs_norm_c"):
        raise ValueError(f"unsupported decay column {column!r}")
    t = table["time"]
    v = table[column]
    keep = v > 0
    if not np.all(keep):
        warnings.warn(f"skipping {int((~keep).sum())} nonpositive values of "
                      f"{column}", stacklevel=2)
    t, v = t[keep], v[keep]
    if len(t) < 2:
        raise ValueError(f"not enough positive values of {column} to plot")
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.semilogy(t, v, "o-", ms=3, lw=1.2, label=column)
    tail = slice(len(t) // 2, None)
    slope = float(np.polyfit(t[tail], np.log(v[tail]), 1)[0])
    ax.semilogy(t, v[0] * np.exp(slope * (t - t[0])), ":", lw=1.0,
                label=f"fit: exp({slope:.2f} t)")
    if theoretical_rate is not None:
        ax.semilogy(t, v[0] * np.exp(-theoretical_rate * (t - t[0])), "k--",
                    lw=1.0, label=f"reference: exp(-{theoretical_rate:g} t)")
    ax.set_xlabel("$t$")
    ax.set_ylabel(column)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return {"fitted_slope": slope, "points": int(len(t)), "out": str(out_path)}
