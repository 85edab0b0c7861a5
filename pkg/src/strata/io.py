"""File formats: JSON for structured results, CSV for grids.

Floats are written with 17 significant digits so that profiles round-trip
exactly, and JSON keys are sorted, which keeps reruns byte-identical.
"""
from __future__ import annotations

import json
import math
import os

import numpy as np

from .potential import HypothesisReport, parse_potential
from .profile1d import AtlasRun, Grid1D, HeteroclinicAtlas, Profile

FLOAT_FMT = "%.17g"


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_clean(obj), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def as_float(v):
    if isinstance(v, str):
        return float(v)
    return float(v)


def write_csv(path, header, columns):
    data = np.column_stack([np.asarray(c, dtype=float).ravel() for c in columns])
    np.savetxt(path, data, delimiter=",", header=",".join(header), comments="", fmt=FLOAT_FMT)


def read_csv(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data


# -- profiles and atlas -------------------------------------------------------


def write_profile(path, q):
    v = q.values
    write_csv(path, ("x", "q1", "q2"), (q.grid.x, v[:, 0], v[:, 1]))


def read_profile(path, grid):
    header, data = read_csv(path)
    if header != ["x", "q1", "q2"]:
        raise ValueError(f"{path}: unexpected header {header}")
    return Profile.from_full(grid, data[:, 1:3])


def potential_dict(p):
    if p.kind == "Channel":
        return {"name": "channel", "delta_ch": p.params[0], "eps_w": p.params[1]}
    if p.kind == "GinzburgLandau":
        return {"name": "gl"}
    raise ValueError("only built-in potentials can be serialized")


def atlas_dict(atlas):
    return {
        "potential": potential_dict(atlas.potential),
        "grid": {"lx": atlas.grid.lx, "n": atlas.grid.n},
        "m": atlas.m,
        "m_star": atlas.m_star,
        "d0": atlas.d0,
        "star_holds": atlas.star_holds,
        "cluster_count": atlas.n_clusters,
        "clusters": [
            {"index": i, "action": a, "file": f"minimizer_{i}.csv", "members": members,
             "label": ("Minus" if i == 0 else "Plus") if atlas.n_clusters == 2 else f"cluster_{i}"}
            for i, (a, members) in enumerate(zip(atlas.cluster_actions, atlas.clusters))
        ],
        "distances": atlas.distances,
        "gap": atlas.gap,
        "nu_measured": [[r, v] for r, v in sorted(atlas.nu_measured.items())],
        "spread": atlas.spread,
        "el_tol": atlas.el_tol,
        "cluster_eps": atlas.cluster_eps,
        "atlas_window": atlas.atlas_window,
        "el_residuals": atlas.el_residuals(),
        "hypothesis": atlas.hypothesis.to_dict(),
        "runs": [vars(r) for r in atlas.runs],
    }


def save_atlas(atlas, outdir):
    os.makedirs(outdir, exist_ok=True)
    write_json(os.path.join(outdir, "atlas.json"), atlas_dict(atlas))
    for i, q in enumerate(atlas.minimizers):
        write_profile(os.path.join(outdir, f"minimizer_{i}.csv"), q)


def load_atlas(outdir):
    d = read_json(os.path.join(outdir, "atlas.json"))
    pd = d["potential"]
    p = parse_potential(pd["name"], pd.get("delta_ch", 0.9), pd.get("eps_w", 0.05))
    grid = Grid1D(float(d["grid"]["lx"]), int(d["grid"]["n"]))
    reps = [read_profile(os.path.join(outdir, c["file"]), grid) for c in d["clusters"]]
    return HeteroclinicAtlas(
        potential=p, grid=grid, m=float(d["m"]), minimizers=reps,
        cluster_actions=[float(c["action"]) for c in d["clusters"]],
        clusters=[list(c["members"]) for c in d["clusters"]],
        distances=np.array(d["distances"], dtype=float), d0=float(d["d0"]),
        m_star=float(d["m_star"]), star_holds=bool(d["star_holds"]),
        nu_measured={float(r): float(v) for r, v in d["nu_measured"]}, gap=as_float(d["gap"]),
        hypothesis=HypothesisReport.from_dict(d["hypothesis"]),
        runs=[AtlasRun(**r) for r in d["runs"]], el_tol=float(d["el_tol"]),
        cluster_eps=float(d["cluster_eps"]), atlas_window=float(d["atlas_window"]),
        spread=float(d["spread"]),
    )


# -- strip outputs --------------------------------------------------------------


def write_field(path, x, y, values):
    """Full-grid field, rows ordered by y then x."""
    X, Y = np.meshgrid(x, y)
    write_csv(path, ("x", "y", "u1", "u2"), (X, Y, values[..., 0], values[..., 1]))


def read_field(path):
    header, data = read_csv(path)
    if header != ["x", "y", "u1", "u2"]:
        raise ValueError(f"{path}: unexpected header {header}")
    x = np.unique(data[:, 0])
    y = np.unique(data[:, 1])
    values = data[:, 2:4].reshape(len(y), len(x), 2)
    return x, y, values


def write_metrics(path, metrics):
    write_csv(path, ("y", "V", "kinetic", "E", "dist_minus", "dist_plus"),
              (metrics.y, metrics.V, metrics.kinetic, metrics.E, metrics.dist_minus,
               metrics.dist_plus))


def write_audits(path, results):
    write_json(path, [r.to_dict() for r in results])
