"""Command-line entry point: ``strata atlas|solve|audit|run``."""
from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import fields

from . import io
from .config import RunConfig, load_config
from .errors import ConfigError, StrataError
from .pipeline import (
    EXIT_AUDIT,
    EXIT_CONVERGENCE,
    EXIT_OK,
    atlas_from_config,
    finish_level,
    load_solution,
    solve_level,
    run_pipeline,
    write_atlas,
)
from .verify import all_passed, audit_1d

_HELP = {
    "potential": "gl or channel",
    "c_rel": "comma separated levels t in [0, 1]; c = m + t (m_star - m)",
    "seed": "label seeding the multistart generator",
    "max_iter": "iteration budget of each penalty stage",
    "v_tol": "slice tolerance for V <= c, as a fraction of m_star - m",
    "constraint_tol": "allowed interior dip below c, as a fraction of m_star - m",
}


def _c_list(text):
    try:
        return tuple(float(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed c_rel list '{text}'") from None


def _add_config_flags(ap, only=None):
    for f in fields(RunConfig):
        if only is not None and f.name not in only:
            continue
        kind = {"int": int, "float": float, "tuple": _c_list}.get(f.type, str)
        ap.add_argument("--" + f.name.replace("_", "-"), dest=f.name, type=kind, default=None,
                        help=_HELP.get(f.name, f"default {getattr(RunConfig, f.name)!r}"))


def _config(args):
    base = load_config(args.config) if args.config else RunConfig()
    over = {f.name: getattr(args, f.name, None) for f in fields(RunConfig)}
    return base.with_overrides(**over)


def _common(ap):
    ap.add_argument("--config", help="configuration file (key = value with [section] headers)")
    ap.add_argument("--no-figures", action="store_true", help="skip the PNG figures")
    ap.add_argument("--strict", action="store_true", help="exit with status 5 when an audit fails")
    ap.add_argument("-v", "--verbose", action="count", default=0)


def build_parser():
    ap = argparse.ArgumentParser(prog="strata", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    a = sub.add_parser("atlas", help="multistart 1-D minimization and the (*) verdict")
    _common(a)
    _add_config_flags(a, {"potential", "delta_ch", "eps_w", "lx", "n", "starts", "el_tol",
                          "cluster_eps", "boundary_tol", "seed", "out"})

    s = sub.add_parser("solve", help="solve the strip problem at one level")
    _common(s)
    s.add_argument("--atlas", required=True, help="directory written by 'strata atlas'")
    s.add_argument("--c-rel", dest="c_rel_one", type=float, default=None,
                   help="level t in [0, 1]; c = m + t (m_star - m)")
    _add_config_flags(s, {"nx", "ly", "ny", "pde_tol", "v_tol", "neumann_tol", "constraint_tol",
                          "max_iter", "out"})

    d = sub.add_parser("audit", help="re-run the audits of an atlas and optionally a solution")
    _common(d)
    d.add_argument("--atlas", required=True)
    d.add_argument("--solution", help="directory written by 'strata solve'")
    _add_config_flags(d, {"boundary_tol", "neumann_tol", "v_tol"})

    r = sub.add_parser("run", help="full pipeline over the configured c schedule")
    _common(r)
    r.add_argument("--parallel-c", type=int, default=1, metavar="N",
                   help="solve up to N levels concurrently")
    _add_config_flags(r)
    return ap


def _report_audits(results):
    for a in results:
        print(f"{a.name:<34} {'pass' if a.passed else 'FAIL'}  margin {a.margin:.3e}")


def _cmd_atlas(args, cfg):
    atlas = atlas_from_config(cfg)
    audits = write_atlas(atlas, cfg.out, cfg, figures=not args.no_figures)
    _report_audits(audits)
    print(f"m = {atlas.m:.12g}  m_star = {atlas.m_star:.12g}  clusters = {atlas.n_clusters}  "
          f"(*) {'holds' if atlas.star_holds else 'fails'}")
    return EXIT_AUDIT if args.strict and not all_passed(audits) else EXIT_OK


def _cmd_solve(args, cfg):
    atlas = io.load_atlas(args.atlas)
    cfg = cfg.with_overrides(lx=atlas.grid.lx)
    t = args.c_rel_one if args.c_rel_one is not None else cfg.c_rel[0]
    if not 0.0 <= t <= 1.0:
        raise ConfigError(f"c_rel value {t} outside [0, 1]", key="c_rel")
    report, _, audits = solve_level(atlas, cfg, t, cfg.out, figures=not args.no_figures)
    _report_audits(audits)
    print(f"{report.kind}: c = {report.c:.12g}  T_c = {report.T_c:.6g}  "
          f"energy_dev = {report.energy_dev:.3e}  residual = {report.residual:.3e}")
    if not report.converged:
        return EXIT_CONVERGENCE
    return EXIT_AUDIT if args.strict and not all_passed(audits) else EXIT_OK


def _cmd_audit(args, cfg):
    atlas = io.load_atlas(args.atlas)
    audits = audit_1d(atlas, boundary_tol=cfg.boundary_tol)
    io.write_audits(os.path.join(args.atlas, "audits.json"), audits)
    if args.solution:
        result, ax, rep = load_solution(args.solution, atlas)
        scfg = cfg.with_overrides(lx=result.field.grid.grid_x.lx, nx=result.field.grid.grid_x.n,
                                  ly=result.field.grid.ly, ny=result.field.grid.ny)
        _, _, more = finish_level(result, ax, scfg, float(rep.get("c_rel", 0.0)),
                                  float(rep["c"]), args.solution, figures=not args.no_figures)
        audits = audits + more
    _report_audits(audits)
    failed = [a.name for a in audits if not a.passed]
    print(f"{len(audits) - len(failed)}/{len(audits)} audits passed"
          + (f"; failed: {', '.join(failed)}" if failed else ""))
    return EXIT_AUDIT if args.strict and failed else EXIT_OK


def _cmd_run(args, cfg):
    status = run_pipeline(cfg, figures=not args.no_figures, strict=args.strict,
                          parallel=max(1, args.parallel_c))
    print(open(os.path.join(cfg.out, "summary.md"), encoding="utf-8").read(), end="")
    return status


def _thread_limit():
    raw = os.environ.get("STRATA_THREADS")
    if not raw:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"STRATA_THREADS must be a positive integer, got '{raw}'") from None
    if n < 1:
        raise ConfigError(f"STRATA_THREADS must be a positive integer, got '{raw}'")
    return n


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        threads = _thread_limit()
        handler = {"atlas": _cmd_atlas, "solve": _cmd_solve, "audit": _cmd_audit,
                   "run": _cmd_run}[args.command]
        if threads is None:
            return handler(args, cfg)
        from threadpoolctl import threadpool_limits

        with threadpool_limits(limits=threads):
            return handler(args, cfg)
    except StrataError as exc:
        print(f"strata: error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
