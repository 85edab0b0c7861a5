"""Machine-checkable inequalities over computed connections and strip fields.

Every audit returns a signed margin (positive means the inequality holds) and
passes when the margin is at least minus the tolerance stored in its context.
Discretization slack is always explicit in the context, never folded into the
margin.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AtlasInconsistencyError, HypothesisError
from .potential import A_MINUS, A_PLUS, chi
from .profile1d import MINUS, PLUS, Profile, classify_sublevel, truncate_tail
from .strip2d import BRAKE_ORBIT, HETEROCLINIC, HOMOCLINIC_LEFT, HOMOCLINIC_RIGHT, _gram_distances


@dataclass
class AuditResult:
    name: str
    passed: bool
    margin: float
    context: dict = field(default_factory=dict)

    @classmethod
    def check(cls, name, margin, tolerance=0.0, **context):
        margin = float(margin)
        if not math.isfinite(margin):
            raise ValueError(f"audit {name}: margin must be finite")
        context = {"tolerance": float(tolerance), **{k: _plain(v) for k, v in context.items()}}
        return cls(name, margin >= -tolerance, margin, context)

    def to_dict(self):
        return {"name": self.name, "passed": bool(self.passed), "margin": self.margin,
                "context": self.context}


def _plain(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else ("inf" if v > 0 else ("-inf" if v < 0 else "nan"))
    return v


# -- one-dimensional audits -------------------------------------------------------


def linf_radius(report, m, lam):
    return 2.0 * max(report.R, (m + lam) / math.sqrt(2.0 * report.mu0))


def tail_time_formula(report, m, lam):
    omega = report.omega(linf_radius(report, m, lam))
    if omega <= 0:
        return math.inf
    return (m + lam) / (omega * report.delta0 ** 2)


def measured_tail_time(q, delta_bar):
    x = q.grid.x
    far = chi(q.values) >= delta_bar
    return float(np.max(np.abs(x[far]))) if far.any() else 0.0


def chord_bound_1d_margin(q, p):
    """min over node pairs of V_(s,t)(q) - sqrt(2 mu) |q(t) - q(s)|, mu = min W on [s, t]."""
    vals = q.values
    h = q.grid.h
    W = p.value(vals)
    d = np.diff(vals, axis=0)
    K = np.r_[0.0, np.cumsum(0.5 * np.sum(d * d, axis=1) / h)]
    P = np.r_[0.0, np.cumsum(0.5 * h * (W[1:] + W[:-1]))]
    worst = math.inf
    worst_pair = (0, 0)
    n = len(vals)
    for s in range(n - 1):
        mu = np.minimum.accumulate(W[s + 1:])
        mu = np.minimum(mu, W[s])
        act = (K[s + 1:] - K[s]) + (P[s + 1:] - P[s])
        jump = np.linalg.norm(vals[s + 1:] - vals[s], axis=1)
        marg = act - np.sqrt(2.0 * mu) * jump
        j = int(np.argmin(marg))
        if marg[j] < worst:
            worst, worst_pair = float(marg[j]), (s, s + 1 + j)
    return worst, worst_pair


def audit_profile(q, p, report, m, lam, el_tol, label="q"):
    """Audits of a single connection in deterministic order."""
    out = []
    R_lam = linf_radius(report, m, lam)
    sup = float(np.max(np.linalg.norm(q.values, axis=1)))
    out.append(AuditResult.check(f"linf_bound[{label}]", R_lam - sup, R_lambda=R_lam, sup_norm=sup,
                                 lam=lam))

    T_meas = measured_tail_time(q, report.delta_bar)
    T_form = tail_time_formula(report, m, lam)
    # measured tail time must stay inside the window; the formula value is reported alongside
    out.append(AuditResult.check(f"tail_concentration[{label}]", q.grid.lx - T_meas,
                                 T_measured=T_meas, T_formula=T_form, delta_bar=report.delta_bar))

    h = q.grid.h
    slack = h * float(np.max(0.5 * np.sum(np.gradient(q.values, h, axis=0) ** 2, axis=1)
                             + p.value(q.values)))
    marg, pair = chord_bound_1d_margin(q, p)
    out.append(AuditResult.check(f"chord_bound_1d[{label}]", marg, slack, pair_lo=pair[0],
                                 pair_hi=pair[1], quadrature_slack=slack))

    res = q.residual(p)
    out.append(AuditResult.check(f"el_residual[{label}]", 10.0 * el_tol - res, residual=res,
                                 el_tol=el_tol))

    x = q.grid.x
    dist = np.linalg.norm(q.values - A_PLUS, axis=1)
    ok = np.nonzero((x > 0) & (dist < report.delta_bar) & (x + 1.0 <= q.grid.lx))[0]
    if ok.size:
        t0 = int(ok[0])
        delta = float(dist[t0])
        qt, lhs, rhs = truncate_tail(q, t0, p, report.w_hi, report.delta_bar)
        out.append(AuditResult.check(f"truncation_bound[{label}]", rhs - m, 1e-12 * max(1.0, m),
                                     t0=float(x[t0]), delta=delta, bridged_action=lhs, bound=rhs,
                                     resymmetrized_action=qt.action(p)))
    else:
        out.append(AuditResult.check(f"truncation_bound[{label}]", -1.0, reason="no node within delta_bar of a+"))
    return out


def audit_1d(atlas, report=None, boundary_tol=1e-3):
    """Audits for every stored minimizer of an atlas."""
    report = report or atlas.hypothesis
    lam = report.lambda0
    out = []
    for i, q in enumerate(atlas.minimizers):
        out.extend(audit_profile(q, atlas.potential, report, atlas.m, lam, atlas.el_tol,
                                 label=str(i)))
        gap = max(q.boundary_gap(), float(np.linalg.norm(q.values[0] - A_MINUS)))
        out.append(AuditResult.check(f"boundary_proximity[{i}]", boundary_tol - gap, gap=gap,
                                     boundary_tol=boundary_tol))
    return out


# -- two-dimensional audits -------------------------------------------------------


def chord_bound_2d_margin(half, gx, k, V, c):
    """min over slice pairs with V > c between them of phi_{c,(y1,y2)} - sqrt(2 mu) ||u1 - u2||."""
    D = _gram_distances(half, gx)
    w = gx.weights[:, None]
    cell = np.sum(w * np.diff(half, axis=0) ** 2, axis=(1, 2)) / (2.0 * k)
    K = np.r_[0.0, np.cumsum(cell)]
    P = np.r_[0.0, np.cumsum(0.5 * k * ((V[1:] - c) + (V[:-1] - c)))]
    worst, count = math.inf, 0
    n = len(V)
    for a in range(n - 1):
        mu = np.minimum(np.minimum.accumulate(V[a + 1:] - c), V[a] - c)
        good = mu > 0
        if not good.any():
            continue
        phi = (K[a + 1:] - K[a]) + (P[a + 1:] - P[a])
        marg = phi - np.sqrt(2.0 * np.where(good, mu, 0.0)) * D[a, a + 1:]
        marg = marg[good]
        count += int(good.sum())
        worst = min(worst, float(marg.min()))
    return worst, count


def audit_2d(field_half, y, gx, metrics, report, atlas, c, turning_profiles=None):
    """Audits of a solved strip against the layered-solution properties.

    ``field_half`` is the strip's slice stack with its ``metrics``; ``atlas``
    must live on the same x-grid.  ``turning_profiles`` are the slices at s_c
    and t_c (taken from the polished period for brake orbits).
    """
    k = float(y[1] - y[0])
    tol_e = 1e-2 * abs(c)
    out = []
    D = _gram_distances(field_half, gx)
    V = metrics.V
    cell = np.sum(gx.weights[:, None] * np.diff(field_half, axis=0) ** 2, axis=(1, 2)) / (2.0 * k)
    phi_window = float(cell.sum() + np.trapezoid(V - c, dx=k))

    gap = atlas.m_star - c
    if gap > 0:
        s = math.sqrt(2.0 * gap)
        diam = 2.0 * atlas.d0 + atlas.spread
        C = max(1.0 / s, 2.0 * diam / phi_window) if phi_window > 0 else 1.0 / s
        out.append(AuditResult.check("slice_spread_bound", C * phi_window - float(D.max()),
                                     C=C, D=diam, phi_c=phi_window, max_distance=float(D.max())))
        bound = s * atlas.d0
        out.append(AuditResult.check("mc_lower_bound", phi_window - bound, bound=bound,
                                     phi_c=phi_window, d0=atlas.d0, m_star=atlas.m_star))

    marg, pairs = chord_bound_2d_margin(field_half, gx, k, V, c)
    slack = 1e-12 * max(1.0, abs(phi_window))
    if pairs:
        out.append(AuditResult.check("chord_bound_2d", marg, slack, pairs=pairs, quadrature_slack=slack))
    else:
        out.append(AuditResult.check("chord_bound_2d", 0.0, slack, pairs=0, quadrature_slack=slack))

    cont = metrics.continuity_violation
    out.append(AuditResult.check("continuity_estimate", -cont, 1e-12, violation=cont))

    out.append(AuditResult.check("energy_identity", tol_e - report.energy_dev, energy_dev=report.energy_dev,
                                 c=c))
    out.append(AuditResult.check("equipartition", 1e-2 - report.equipartition_rel,
                                 gap=report.equipartition_gap, gap_rel=report.equipartition_rel))

    consistent = {
        HETEROCLINIC: math.isinf(report.s_c) and math.isinf(report.t_c),
        BRAKE_ORBIT: math.isfinite(report.s_c) and math.isfinite(report.t_c),
        HOMOCLINIC_LEFT: math.isinf(report.s_c) and math.isfinite(report.t_c),
        HOMOCLINIC_RIGHT: math.isfinite(report.s_c) and math.isinf(report.t_c),
    }[report.kind]
    out.append(AuditResult.check("classification", 0.0 if consistent else -1.0, kind=report.kind))

    neumann_tol = report.extras.get("neumann_tol", 1e-3)
    for side in ("left", "right"):
        val = getattr(report, f"neumann_{side}")
        if math.isfinite(val):
            out.append(AuditResult.check(f"neumann_{side}", neumann_tol - val, value=val,
                                         neumann_tol=neumann_tol))
    if report.kind != HETEROCLINIC:
        out.append(AuditResult.check("seam_residual", 5.0 * report.consistency_residual - report.seam_residual,
                                     seam=report.seam_residual, interior=report.consistency_residual))

    if report.kind == BRAKE_ORBIT and atlas.star_holds and turning_profiles is not None:
        v_tol = report.extras.get("v_tol", 0.0)
        for label, half_j, want in zip(("s_c", "t_c"), turning_profiles, (MINUS, PLUS)):
            q = Profile(gx, half_j)
            try:
                got = classify_sublevel(atlas, q, c, v_tol)
            except AtlasInconsistencyError:
                got = "Both"
            except (HypothesisError, ValueError) as exc:
                got = f"unclassified: {exc}"
            out.append(AuditResult.check(f"turning_membership[{label}]", 0.0 if got == want else -1.0,
                                         expected=want, found=got))
    return out


def all_passed(results):
    return all(r.passed for r in results)
