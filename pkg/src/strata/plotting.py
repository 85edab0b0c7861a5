"""PNG figures for atlas and strip runs (matplotlib, Agg backend)."""
from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_META = {"Software": None}


def _save(fig, path):
    fig.savefig(path, dpi=110, metadata=_META)
    plt.close(fig)
    return path


def plot_atlas(atlas, outdir):
    """Minimizers in the target plane and their components along x."""
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(10, 4))
    for i, q in enumerate(atlas.minimizers):
        v = q.values
        ax0.plot(v[:, 0], v[:, 1], label=f"minimizer {i}")
        ax1.plot(q.grid.x, v[:, 0], label=f"q1 ({i})")
        ax1.plot(q.grid.x, v[:, 1], "--", label=f"q2 ({i})")
    ax0.plot([-1, 1], [0, 0], "ko", ms=4)
    ax0.set_xlabel("q1")
    ax0.set_ylabel("q2")
    ax0.set_aspect("equal", adjustable="datalim")
    ax0.legend(fontsize=8)
    ax1.set_xlabel("x")
    ax1.legend(fontsize=8)
    fig.suptitle(f"{atlas.potential.label}: m = {atlas.m:.8f}, (*) {'holds' if atlas.star_holds else 'fails'}")
    fig.tight_layout()
    return [_save(fig, os.path.join(outdir, "atlas.png"))]


def plot_solution(field, metrics, report, outdir, extended=None):
    """Component maps of the strip field, slice diagnostics and the continued field."""
    paths = []
    x = field.grid.grid_x.x
    y = field.y
    vals = field.values
    fig, axes = plt.subplots(1, 2, figsize=(11, 4.5))
    for comp, ax in enumerate(axes):
        im = ax.pcolormesh(x, y, vals[..., comp], shading="auto", cmap="RdBu_r")
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        ax.set_title(f"u{comp + 1}")
        fig.colorbar(im, ax=ax)
    fig.suptitle(f"{report.kind}, c = {report.c:.8f}")
    fig.tight_layout()
    paths.append(_save(fig, os.path.join(outdir, "field.png")))

    fig, (ax0, ax1) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    ax0.plot(metrics.y, metrics.V, label="V")
    ax0.plot(metrics.y, metrics.E, label="E")
    ax0.plot(metrics.y, metrics.kinetic, label="kinetic")
    ax0.axhline(report.c, color="k", lw=0.6, ls=":")
    ax0.axhline(-report.c, color="k", lw=0.6, ls=":")
    for yy in (report.s_c, report.t_c):
        if np.isfinite(yy):
            ax0.axvline(yy, color="gray", lw=0.8)
            ax1.axvline(yy, color="gray", lw=0.8)
    ax0.legend(fontsize=8)
    ax1.plot(metrics.y, metrics.dist_minus, label="dist to minus")
    ax1.plot(metrics.y, metrics.dist_plus, label="dist to plus")
    ax1.set_xlabel("y")
    ax1.legend(fontsize=8)
    fig.tight_layout()
    paths.append(_save(fig, os.path.join(outdir, "metrics.png")))

    if extended is not None:
        ev = extended.values
        fig, ax = plt.subplots(figsize=(7, 4.5))
        im = ax.pcolormesh(x, extended.y, ev[..., 1], shading="auto", cmap="RdBu_r")
        for r in extended.seam_rows:
            ax.axhline(extended.y[r], color="k", lw=0.6, ls="--")
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        ax.set_title("u2, continued by reflection")
        fig.colorbar(im, ax=ax)
        fig.tight_layout()
        paths.append(_save(fig, os.path.join(outdir, "extended.png")))
    return paths
