"""End-to-end runs: atlas, strip solves over a c schedule, audits and summary."""
from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from . import io
from .errors import ConvergenceError, HypothesisError
from .potential import parse_potential
from .profile1d import Grid1D, build_atlas
from .strip2d import (
    BRAKE_ORBIT,
    Field,
    Grid2D,
    StripResult,
    classify_and_extend,
    detect_turning,
    field_metrics,
    initial_field,
    minimize_strip,
    pde_residual,
    renormalized_action,
)
from .verify import all_passed, audit_1d, audit_2d

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_HYPOTHESIS, EXIT_CONVERGENCE, EXIT_AUDIT = 0, 2, 3, 4, 5

STAR_REFUSAL = (
    "hypothesis (*) fails for this potential: the minimal heteroclinics do not form exactly "
    "two isolated clusters, so the sublevel sets of the level c > m have no Minus/Plus "
    "decomposition and the run at c = {c:.10g} is refused"
)


@dataclass
class LevelOutcome:
    c_rel: float
    c: float
    status: int
    message: str
    report: dict | None = None
    audits_passed: bool | None = None


def level_dirname(c_rel):
    return f"c_rel_{c_rel:.4f}"


def atlas_from_config(cfg):
    p = parse_potential(cfg.potential, cfg.delta_ch, cfg.eps_w)
    return build_atlas(p, Grid1D(cfg.lx, cfg.n), n_starts=cfg.starts, el_tol=cfg.el_tol,
                       cluster_eps=cfg.cluster_eps, seed_label=cfg.seed)


def write_atlas(atlas, outdir, cfg, figures=True):
    io.save_atlas(atlas, outdir)
    audits = audit_1d(atlas, boundary_tol=cfg.boundary_tol)
    io.write_audits(os.path.join(outdir, "audits.json"), audits)
    if figures:
        from .plotting import plot_atlas

        plot_atlas(atlas, outdir)
    return audits


def level_value(atlas, c_rel):
    return atlas.m + c_rel * (atlas.m_star - atlas.m)


def _scale(atlas):
    s = atlas.m_star - atlas.m
    return s if s > 0 else 1.0


def solve_level(atlas, cfg, c_rel, outdir, figures=True):
    """Solve, classify and audit one level; returns (report, extended field, audits).

    ``atlas`` may live on any x-grid; it is moved to the strip's grid first.
    """
    if c_rel > 0 and not atlas.star_holds:
        raise HypothesisError(STAR_REFUSAL.format(c=level_value(atlas, c_rel)))
    gx = Grid1D(cfg.lx, cfg.nx)
    ax = atlas.on_grid(gx)
    p = ax.potential
    c = level_value(ax, c_rel)
    scale = _scale(ax)
    grid = Grid2D(gx, cfg.ly, cfg.ny)
    qm, qp = ax.q_minus, ax.q_plus
    init = initial_field(qm, qp, grid, p)
    result = minimize_strip(init, c, p, tol=cfg.pde_tol, constraint_tol=cfg.constraint_tol * scale,
                            scale=scale, max_iter=cfg.max_iter)
    log.info("strip c=%.10g: %s after %d iterations, residual %.3g", c, result.message,
             result.n_iter, result.residual)
    return finish_level(result, ax, cfg, c_rel, c, outdir, figures)


def finish_level(result, ax, cfg, c_rel, c, outdir, figures=True):
    p = ax.potential
    scale = _scale(ax)
    u = result.field
    gx = u.grid.grid_x
    v_tol = cfg.v_tol * scale
    metrics = field_metrics(u, p, c, ax.q_minus, ax.q_plus)
    turning = detect_turning(metrics, c, ax.d0, v_tol, m=ax.m)
    ell0 = min(1.0, math.sqrt(max(ax.m_star - c, 0.0) / 2.0) * ax.d0)
    extras = {
        "c_rel": c_rel, "m": ax.m, "m_star": ax.m_star, "d0": ax.d0, "v_tol": v_tol,
        "neumann_tol": cfg.neumann_tol, "ell0": ell0, "lx": cfg.lx, "nx": cfg.nx, "ly": cfg.ly,
        "ny": cfg.ny, "strip_iterations": result.n_iter, "strip_message": result.message,
        "strip_residual": result.residual, "strip_converged": result.converged,
        "penalty_weight": result.penalty_weight, "min_interior_V": result.min_interior_V,
    }
    report, ext, met = classify_and_extend(result, turning, c, p, ax.q_minus, ax.q_plus,
                                           neumann_tol=cfg.neumann_tol, extras=extras)
    if report.kind == BRAKE_ORBIT:
        n_core = len(met.y)
        core = ext.half[:n_core]
        audits = audit_2d(core, met.y, gx, met, report, ax, c,
                          turning_profiles=(core[0], core[-1]))
    else:
        audits = audit_2d(u.half, u.y, gx, met, report, ax, c)

    os.makedirs(outdir, exist_ok=True)
    io.write_field(os.path.join(outdir, "field.csv"), gx.x, u.y, u.values)
    io.write_metrics(os.path.join(outdir, "metrics.csv"), metrics)
    if ext.seam_rows:
        io.write_field(os.path.join(outdir, "extended.csv"), gx.x, ext.y, ext.values)
    io.write_json(os.path.join(outdir, "report.json"), report.to_dict())
    io.write_audits(os.path.join(outdir, "audits.json"), audits)
    if figures:
        from .plotting import plot_solution

        plot_solution(u, metrics, report, outdir, extended=ext if ext.seam_rows else None)
    return report, ext, audits


def load_solution(outdir, atlas):
    """Rebuild a strip result from ``field.csv`` and ``report.json`` written by ``solve_level``."""
    rep = io.read_json(os.path.join(outdir, "report.json"))
    x, y, values = io.read_field(os.path.join(outdir, "field.csv"))
    gx = Grid1D(float(x[-1]), len(x))
    grid = Grid2D(gx, float(y[-1]), len(y))
    half = values[:, gx.center:, :]
    u = Field(grid, half)
    ax = atlas.on_grid(gx)
    p = ax.potential
    c = float(rep["c"])
    phi = renormalized_action(u, c, p)
    res = pde_residual(u.values, gx.h, u.k, p)
    result = StripResult(field=u, phi=phi, residual=float(rep.get("strip_residual", res)),
                         converged=bool(rep.get("strip_converged", rep["converged"])),
                         constraint_ok=bool(rep["constraint_ok"]),
                         min_interior_V=float(rep.get("min_interior_V", math.nan)),
                         penalty_weight=float(rep.get("penalty_weight", 0.0)),
                         n_iter=int(rep.get("strip_iterations", 0)),
                         message=str(rep.get("strip_message", "")))
    return result, ax, rep


def _level_task(args):
    atlas_dir, cfg, c_rel, outdir, figures = args
    atlas = io.load_atlas(atlas_dir)
    return run_level(atlas, cfg, c_rel, outdir, figures)


def run_level(atlas, cfg, c_rel, outdir, figures=True):
    c = level_value(atlas, c_rel)
    try:
        report, _, audits = solve_level(atlas, cfg, c_rel, outdir, figures)
    except HypothesisError as exc:
        log.error("%s", exc)
        return LevelOutcome(c_rel, c, EXIT_HYPOTHESIS, str(exc))
    except ConvergenceError as exc:
        log.error("c_rel=%g: %s", c_rel, exc)
        return LevelOutcome(c_rel, c, EXIT_CONVERGENCE, str(exc))
    d = report.to_dict()
    status = EXIT_OK if report.converged else EXIT_CONVERGENCE
    msg = "ok" if report.converged else "not converged"
    return LevelOutcome(c_rel, report.c, status, msg, d, all_passed(audits))


def _fmt(v, spec=".6g"):
    if isinstance(v, str):
        return v
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "-"
    return format(v, spec)


def _status(o):
    return {EXIT_OK: "ok", EXIT_HYPOTHESIS: "refused", EXIT_CONVERGENCE: "not converged"}.get(
        o.status, o.message)


def write_summary(path, atlas, outcomes):
    lines = [
        "# strata run summary",
        "",
        f"potential: {atlas.potential.label}",
        f"m = {atlas.m:.10g}, m_star = {atlas.m_star:.10g}, d0 = {atlas.d0:.6g}, "
        f"clusters = {atlas.n_clusters}, (*) {'holds' if atlas.star_holds else 'fails'}",
        "",
        "Levels are placed on the strip's x-grid, where m and m_star are recomputed (column m).",
        "",
        "| c_rel | m | c | kind | T_c | energy_dev | residual | phi_c | audits | status |",
        "|---|---|---|---|---|---|---|---|---|---|",
    ]
    for o in outcomes:
        r = o.report or {}
        audits = "-" if o.audits_passed is None else ("pass" if o.audits_passed else "FAIL")
        lines.append(
            f"| {o.c_rel:g} | {_fmt(r.get('m'), '.10g')} | {o.c:.10g} | {r.get('kind', 'refused' if o.status == EXIT_HYPOTHESIS else '-')} "
            f"| {_fmt(r.get('T_c'))} | {_fmt(r.get('energy_dev'))} | {_fmt(r.get('residual'))} "
            f"| {_fmt(r.get('phi_c'), '.10g')} | {audits} | {_status(o)} |"
        )
    refusals = [o for o in outcomes if o.status == EXIT_HYPOTHESIS]
    if refusals:
        lines += ["", "Refused levels:", ""]
        lines += [f"- c_rel = {o.c_rel:g}: {o.message}" for o in refusals]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def run_pipeline(cfg, figures=True, strict=False, parallel=1):
    """Run the configured pipeline; returns the process exit status."""
    out = cfg.out
    os.makedirs(out, exist_ok=True)
    atlas_dir = os.path.join(out, "atlas")
    atlas = atlas_from_config(cfg)
    audits1 = write_atlas(atlas, atlas_dir, cfg, figures)
    jobs = [(atlas_dir, cfg, t, os.path.join(out, level_dirname(t)), figures) for t in cfg.c_rel]
    if parallel > 1 and len(jobs) > 1:
        # workers reload the atlas from disk so no state is shared with the parent
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            outcomes = list(pool.map(_level_task, jobs))
    else:
        outcomes = [run_level(atlas, cfg, t, d, figures) for _, _, t, d, _ in jobs]
    write_summary(os.path.join(out, "summary.md"), atlas, outcomes)

    codes = [o.status for o in outcomes]
    if EXIT_HYPOTHESIS in codes:
        return EXIT_HYPOTHESIS
    if EXIT_CONVERGENCE in codes:
        return EXIT_CONVERGENCE
    passed = all_passed(audits1) and all(o.audits_passed is not False for o in outcomes)
    if strict and not passed:
        return EXIT_AUDIT
    return EXIT_OK


def c_schedule(n=8):
    """Evenly spaced interior levels c_i = m + i (m_star - m)/n, i = 1..n-1, as c_rel values."""
    return tuple(float(i) / n for i in range(1, n))

