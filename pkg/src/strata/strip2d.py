"""Layered solutions on the strip [-Lx, Lx] x [-Ly, Ly].

A field is a stack of symmetric 1-D profiles u(., y_j), stored on the right
half of the x-grid like ``profile1d.Profile``.  The discrete renormalized action is

    phi_c(U) = sum_cells ||U_{j+1} - U_j||^2 / (2k) + sum_j k w_j (V(U_j) - c)

where ||.|| is the half-grid L2 norm over the whole line and V the discrete
1-D action.  Its gradient divided by the node measure is the 5-point residual
-Delta u + grad W(u).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu, spsolve

from .errors import ConvergenceError, GeometryError, TurningDetectionError
from .optim import lbfgs
from .profile1d import (
    Grid1D,
    Profile,
    free_mask,
    half_action,
    half_gradient,
    half_hessian,
    kinetic_matrix,
    mirror,
    symmetrize,
    well_shift,
)

log = logging.getLogger(__name__)

HETEROCLINIC = "Heteroclinic"
HOMOCLINIC_LEFT = "HomoclinicLeft"
HOMOCLINIC_RIGHT = "HomoclinicRight"
BRAKE_ORBIT = "BrakeOrbit"


@dataclass(frozen=True)
class Grid2D:
    grid_x: Grid1D
    ly: float = 15.0
    ny: int = 301

    def __post_init__(self):
        if self.ny < 65:
            raise ValueError(f"ny must be at least 65 (got {self.ny})")
        if not self.ly > 0:
            raise ValueError("ly must be positive")

    @property
    def k(self):
        return 2.0 * self.ly / (self.ny - 1)

    @property
    def y(self):
        return np.linspace(-self.ly, self.ly, self.ny)

    @property
    def y_weights(self):
        w = np.full(self.ny, self.k)
        w[0] = w[-1] = 0.5 * self.k
        return w

    def refined(self):
        return Grid2D(self.grid_x.refined(), self.ly, 2 * (self.ny - 1) + 1)


class Field:
    """Half-grid values of shape (ny, nh, 2) on a ``Grid2D``."""

    def __init__(self, grid, half):
        half = np.array(half, dtype=float)
        shape = (grid.ny, grid.grid_x.nh, 2)
        if half.shape != shape:
            raise ValueError(f"field must have shape {shape}, got {half.shape}")
        half[:, 0, 0] = 0.0
        self.grid = grid
        self.half = half

    @property
    def values(self):
        return mirror(self.half)

    @property
    def y(self):
        return self.grid.y

    @property
    def k(self):
        return self.grid.k

    def slice(self, j):
        return Profile(self.grid.grid_x, self.half[j])

    def copy(self):
        return Field(self.grid, self.half.copy())

    @classmethod
    def constant(cls, grid, profile):
        return cls(grid, np.broadcast_to(profile.half, (grid.ny,) + profile.half.shape))


# -- discrete functional ------------------------------------------------------


def _l2sq(gx, diff):
    return np.sum(gx.weights[:, None] * diff * diff, axis=(-2, -1))


def slice_actions(half, gx, p):
    return half_action(half, gx, p)


def _phi_parts(half, gx, k, wy, p, c):
    dU = np.diff(half, axis=0)
    kin = 0.5 * float(np.sum(_l2sq(gx, dU))) / k
    V = slice_actions(half, gx, p)
    return kin, V, kin + float(np.sum(wy * (V - c)))


def renormalized_action(u, c, p, window=None):
    """phi_c of a field; ``window=(j0, j1)`` restricts to slices j0..j1 (phi_{c,I})."""
    half = u.half
    gx = u.grid.grid_x
    if window is None:
        return _phi_parts(half, gx, u.k, u.grid.y_weights, p, c)[2]
    j0, j1 = window
    if not 0 <= j0 < j1 < len(half):
        raise ValueError("window must satisfy 0 <= j0 < j1 < ny")
    seg = half[j0:j1 + 1]
    wy = np.full(len(seg), u.k)
    wy[0] = wy[-1] = 0.5 * u.k
    return _phi_parts(seg, gx, u.k, wy, p, c)[2]


def _penalized(half, gx, k, wy, p, c, pw):
    """Value and gradient of phi_c plus the exterior penalty pw * k w_j (c - V_j)_+^2."""
    kin, V, phi = _phi_parts(half, gx, k, wy, p, c)
    short = np.clip(c - V, 0.0, None)
    f = phi + pw * float(np.sum(wy * short ** 2))
    dU = np.diff(half, axis=0) * gx.weights[:, None]
    g = np.zeros_like(half)
    g[:-1] -= dU
    g[1:] += dU
    g /= k
    coef = wy * (1.0 - 2.0 * pw * short)
    g += coef[:, None, None] * half_gradient(half, gx, p)
    return f, g, V


def phi_gradient(u, c, p, pw=0.0):
    """Gradient of the (optionally penalized) discrete phi_c w.r.t. all half-grid values."""
    return _penalized(u.half, u.grid.grid_x, u.k, u.grid.y_weights, p, c, pw)[1]


def _node_measure(gx, wy):
    return wy[:, None, None] * gx.weights[None, :, None]


def _free_layout(grid):
    nh, ny = grid.grid_x.nh, grid.ny
    mask = np.zeros((ny, nh, 2), dtype=bool)
    mask[1:-1] = free_mask(nh)
    return mask


def _assemble(grid_x, k, wy, blocks):
    """Sparse operator: y-kinetic coupling plus per-slice blocks (list of sparse matrices)."""
    ny = len(wy)
    Ty = sp.diags([-np.ones(ny - 1), np.r_[1.0, np.full(ny - 2, 2.0), 1.0], -np.ones(ny - 1)],
                  [-1, 0, 1]) / k
    Mx = sp.diags(np.repeat(grid_x.weights, 2))
    return (sp.kron(Ty, Mx) + sp.block_diag(blocks)).tocsr()


def strip_hessian(half, grid_x, k, wy, p):
    blocks = [w * half_hessian(U, grid_x, p) for w, U in zip(wy, half)]
    return _assemble(grid_x, k, wy, blocks)


def _preconditioner(grid, shift):
    gx = grid.grid_x
    Kx = kinetic_matrix(gx.nh, gx.h) + shift * sp.diags(np.repeat(gx.weights, 2))
    A = _assemble(gx, grid.k, grid.y_weights, [w * Kx for w in grid.y_weights])
    idx = np.nonzero(_free_layout(grid).ravel())[0]
    lu = splu(A[idx][:, idx].tocsc(), permc_spec="MMD_AT_PLUS_A")
    return lu.solve


# -- residuals ----------------------------------------------------------------


def _laplacian(values, h, k, periodic, order):
    if order == 2:
        cx = np.array([1.0, -2.0, 1.0]) / h ** 2
        cy = np.array([1.0, -2.0, 1.0]) / k ** 2
    else:
        cx = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / (12.0 * h ** 2)
        cy = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / (12.0 * k ** 2)
    r = len(cx) // 2
    ny, nx = values.shape[:2]
    if periodic:
        ext = np.concatenate([values[-r:], values, values[:r]], axis=0)
        ylo, yhi = r, ny + r
    else:
        ext = values
        ylo, yhi = r, ny - r
    xlo, xhi = r, nx - r
    core = ext[ylo:yhi, xlo:xhi]
    lap = np.zeros_like(core)
    # stencil weights sum to zero, so accumulate differences from the centre
    for off, cf in zip(range(-r, r + 1), cx):
        if off:
            lap += cf * (ext[ylo:yhi, xlo + off:xhi + off] - core)
    for off, cf in zip(range(-r, r + 1), cy):
        if off:
            lap += cf * (ext[ylo + off:yhi + off, xlo:xhi] - core)
    return core, lap, (ylo - (r if periodic else 0), xlo)


def residual_map(values, h, k, p, periodic=False, order=2):
    """|-Delta u + grad W(u)| at interior nodes of a full-grid array (ny, nx, 2).

    ``order=2`` is the 5-point stencil; ``order=4`` the fourth-order stencil,
    whose value on a 5-point solution measures how well it solves the PDE.
    Returns the pointwise Euclidean norms and the (row, column) offset of the
    first entry.
    """
    core, lap, offset = _laplacian(np.asarray(values, dtype=float), h, k, periodic, order)
    res = -lap + p.gradient(core)
    return np.linalg.norm(res, axis=-1), offset


def pde_residual(values, h, k, p, periodic=False, order=2):
    r, _ = residual_map(values, h, k, p, periodic, order)
    return float(r.max()) if r.size else 0.0


def field_residual(u, p, order=2):
    return pde_residual(u.values, u.grid.grid_x.h, u.k, p, order=order)


# -- initial field and minimization --------------------------------------------


def smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def initial_field(q_minus, q_plus, grid, p):
    """Blend q- into q+ with a C1 smoothstep supported on |y| <= Ly/4."""
    gx = grid.grid_x
    if q_minus.grid != gx or q_plus.grid != gx:
        raise GeometryError("representatives must live on the strip's x-grid")
    theta = smoothstep((grid.y + grid.ly / 4.0) / (grid.ly / 2.0))
    half = (1.0 - theta)[:, None, None] * q_minus.half + theta[:, None, None] * q_plus.half
    for j in range(1, grid.ny - 1):
        if 0.0 < theta[j] < 1.0:
            half[j] = symmetrize(mirror(half[j]), gx, p).half
    half[0] = q_minus.half
    half[-1] = q_plus.half
    return Field(grid, half)


@dataclass
class StripResult:
    field: Field
    phi: float
    residual: float
    converged: bool
    constraint_ok: bool
    min_interior_V: float
    penalty_weight: float
    n_iter: int
    phi_history: list = field(default_factory=list)
    message: str = ""


def _newton_penalized(half, grid, p, c, pw, tol, max_steps=40, c1=1e-4):
    """Damped Newton on the penalized phi_c with boundary slices fixed.

    The Hessian is a sparse part (y coupling plus slice Hessians scaled by
    1 - 2 pw (c - V_j)_+) and one rank-one term 2 pw k w_j g_j g_j^T per slice
    below the level, handled with the Woodbury identity.
    """
    gx = grid.grid_x
    k, wy = grid.k, grid.y_weights
    mask = _free_layout(grid)
    idx = np.nonzero(mask.ravel())[0]
    meas = np.broadcast_to(_node_measure(gx, wy), half.shape)[mask]
    flat = 8.0 * np.finfo(float).eps

    def evaluate(H):
        f, g, V = _penalized(H, gx, k, wy, p, c, pw)
        return f, g, V, float(np.max(np.abs(g[mask] / meas)))

    half = half.copy()
    f, g, V, res = evaluate(half)
    steps = 0
    for steps in range(1, max_steps + 1):
        if res < tol:
            steps -= 1
            break
        short = np.clip(c - V, 0.0, None)
        scale = wy * (1.0 - 2.0 * pw * short)
        blocks = [s_j * half_hessian(U, gx, p) for s_j, U in zip(scale, half)]
        S = _assemble(gx, k, wy, blocks)[idx][:, idx].tocsc()
        try:
            lu = splu(S, permc_spec="MMD_AT_PLUS_A")
        except RuntimeError:
            break
        rhs = -g[mask]
        d = lu.solve(rhs)
        active = np.nonzero((short > 0) & (np.arange(len(V)) > 0) & (np.arange(len(V)) < len(V) - 1))[0]
        if active.size:
            slice_grad = half_gradient(half, gx, p)
            Gm = np.zeros((idx.size, active.size))
            for col, j in enumerate(active):
                e = np.zeros(half.shape)
                e[j] = slice_grad[j]
                Gm[:, col] = e[mask]
            beta = 2.0 * pw * wy[active]
            SG = lu.solve(Gm)
            cap = np.diag(1.0 / beta) + Gm.T @ SG
            d = d - SG @ np.linalg.solve(cap, Gm.T @ d)
        if not np.all(np.isfinite(d)):
            break
        slope = float(g[mask] @ d)
        if not slope < 0:
            d = rhs / meas
            slope = float(g[mask] @ d)
        t = 1.0
        for _ in range(30):
            trial = half.copy()
            trial[mask] += t * d
            ft, gt, Vt, rt = evaluate(trial)
            if ft <= f + c1 * t * slope or (ft <= f + flat * abs(f) and rt < res):
                break
            t *= 0.5
        else:
            break
        half, f, g, V, res = trial, ft, gt, Vt, rt
    return half, res, steps


def minimize_strip(init, c, p, tol=1e-8, constraint_tol=None, scale=1.0, penalty_w=None,
                   max_escalations=6, max_iter=200, newton_steps=40):
    """Minimize the penalized discrete phi_c with boundary slices held fixed.

    ``scale`` is the problem's action scale (m_star - m); the default penalty
    weight and constraint tolerance are tied to it.  Each penalty stage is a
    preconditioned L-BFGS descent with an iteration budget; the weight grows
    tenfold while the interior constraint V_j >= c - constraint_tol is
    violated.  When no slice sits below the level the penalty is inactive and
    damped Newton steps finish the job.

    Slices pinned at the level form flat runs whose common position along
    the level set is a very soft mode, so penalized stages usually stop on
    the iteration budget; the result is then flagged as not converged.
    """
    grid = init.grid
    gx = grid.grid_x
    k, wy = grid.k, grid.y_weights
    if constraint_tol is None:
        constraint_tol = 1e-2 * scale
    pw = penalty_w if penalty_w is not None else 10.0 / scale
    mask = _free_layout(grid)
    meas = np.broadcast_to(_node_measure(gx, wy), init.half.shape)[mask]
    precond = _preconditioner(grid, well_shift(p))
    half = init.half.copy()
    hist = [renormalized_action(init, c, p)]
    n_iter = 0
    resid = math.inf

    def residual(g):
        return float(np.max(np.abs(g / meas)))

    for escalation in range(max_escalations + 1):
        def fun_grad(xv, pw=pw):
            H = half.copy()
            H[mask] = xv
            f, g, _ = _penalized(H, gx, k, wy, p, c, pw)
            return f, g[mask]

        res = lbfgs(fun_grad, half[mask], residual, tol, precond=precond, max_iter=max_iter)
        half[mask] = res.x
        n_iter += res.n_iter
        resid = res.residual
        below = slice_actions(half[1:-1], gx, p) < c
        if resid >= tol and not below.any():
            half, resid, nsteps = _newton_penalized(half, grid, p, c, pw, tol,
                                                    max_steps=newton_steps)
            n_iter += nsteps
        hist.append(renormalized_action(Field(grid, half), c, p))
        log.debug("penalty stage %d: pw=%.3g lbfgs=%d residual=%.3g", escalation, pw,
                  res.n_iter, resid)
        V = slice_actions(half[1:-1], gx, p)
        if V.min() >= c - constraint_tol:
            break
        pw *= 10.0
        log.info("constraint violated by %.3g; penalty weight -> %.3g", c - V.min(), pw)

    u = Field(grid, half)
    phi = renormalized_action(u, c, p)
    Vi = slice_actions(half[1:-1], gx, p)
    ok = bool(Vi.min() >= c - constraint_tol)
    conv = resid < tol
    msg = "converged" if conv and ok else ("constraint violated" if not ok else "iteration budget")
    return StripResult(field=u, phi=phi, residual=resid, converged=conv, constraint_ok=ok,
                       min_interior_V=float(Vi.min()), penalty_weight=pw, n_iter=n_iter,
                       phi_history=hist, message=msg)


# -- slice diagnostics ----------------------------------------------------------


@dataclass
class SliceMetrics:
    y: np.ndarray
    V: np.ndarray
    kinetic: np.ndarray
    E: np.ndarray
    dist_minus: np.ndarray
    dist_plus: np.ndarray
    continuity_violation: float


def _gram_distances(half, gx):
    X = half.reshape(len(half), -1) * np.sqrt(np.repeat(gx.weights, 2))
    G = X @ X.T
    d = np.diag(G)
    return np.sqrt(np.clip(d[:, None] + d[None, :] - 2.0 * G, 0.0, None))


def slice_metrics(half, y, gx, p, c, q_minus, q_plus):
    """Per-slice V, kinetic energy, E = kinetic - V and L2 distances to q-/q+."""
    half = np.asarray(half)
    k = float(y[1] - y[0])
    V = slice_actions(half, gx, p)
    dy = np.gradient(half, k, axis=0)
    kinetic = 0.5 * _l2sq(gx, dy)
    E = kinetic - V
    dm = np.sqrt(_l2sq(gx, half - q_minus.half))
    dp = np.sqrt(_l2sq(gx, half - q_plus.half))
    # ||u(y2)-u(y1)||^2 <= |y2-y1| * int ||u_y||^2 over all slice pairs
    cell = np.r_[0.0, np.cumsum(_l2sq(gx, np.diff(half, axis=0)) / k)]
    D = _gram_distances(half, gx)
    jj = np.arange(len(half))
    span = np.abs(jj[:, None] - jj[None, :]) * k
    energy = np.abs(cell[:, None] - cell[None, :])
    viol = float(np.max(D ** 2 - span * energy))
    return SliceMetrics(y=np.asarray(y, dtype=float), V=V, kinetic=kinetic, E=E,
                        dist_minus=dm, dist_plus=dp, continuity_violation=viol)


def field_metrics(u, p, c, q_minus, q_plus):
    return slice_metrics(u.half, u.y, u.grid.grid_x, p, c, q_minus, q_plus)


# -- turning slices and classification -------------------------------------------


@dataclass
class Turning:
    s_index: int | None
    t_index: int | None
    s_c: float
    t_c: float

    @property
    def s_finite(self):
        return self.s_index is not None

    @property
    def t_finite(self):
        return self.t_index is not None


def detect_turning(metrics, c, d0, v_tol, m=None):
    """Turning slices from slice metrics.

    At c = m the sublevel {V <= c} is the minimizer set itself, so both
    turning slices are infinite by convention (the anchored boundary slices
    stand in for y = -inf and y = +inf).
    """
    y = metrics.y
    if m is not None and c <= m:
        return Turning(None, None, -math.inf, math.inf)
    low = metrics.V <= c + v_tol
    cand = np.nonzero(low & (metrics.dist_minus <= d0))[0]
    s = int(cand[-1]) if cand.size else None
    start = s + 1 if s is not None else 0
    after = np.nonzero(low[start:])[0]
    t = int(start + after[0]) if after.size else None
    if s is not None and t is not None and t <= s:
        raise TurningDetectionError(f"t_c index {t} does not follow s_c index {s}")
    return Turning(s, t, float(y[s]) if s is not None else -math.inf,
                   float(y[t]) if t is not None else math.inf)


@dataclass
class BrakePolish:
    half: np.ndarray
    k: float
    residual: float
    level_gap: float
    converged: bool
    n_steps: int


def brake_polish(seg, k0, gx, p, c, tol=1e-9, max_steps=40):
    """Bordered Newton for a discrete brake orbit on a fixed number of slices.

    Unknowns are all slices of ``seg`` (natural ends, so the discrete Neumann
    condition holds at both) and the spacing k; the extra equation pins the
    first turning slice to the level V = c.
    """
    half = np.array(seg, dtype=float)
    N1 = len(half)
    if N1 < 4:
        raise TurningDetectionError("turning interval spans fewer than four slices")
    k = float(k0)
    fm = free_mask(gx.nh)
    mask = np.broadcast_to(fm, half.shape).copy()
    idx = np.nonzero(mask.ravel())[0]
    w0 = np.ones(N1)
    w0[0] = w0[-1] = 0.5
    meas = np.broadcast_to(_node_measure(gx, w0), half.shape)[mask]

    def equations(H, kk):
        dU = np.diff(H, axis=0) * gx.weights[:, None]
        Kg = np.zeros_like(H)
        Kg[:-1] -= dU
        Kg[1:] += dU
        Vg = w0[:, None, None] * half_gradient(H, gx, p)
        G = Kg / kk + kk * Vg
        lev = float(half_action(H[0], gx, p)) - c
        return G, Kg, Vg, lev

    def merit(G, kk, lev):
        return max(float(np.max(np.abs(G[mask] / (kk * meas)))), abs(lev))

    G, Kg, Vg, lev = equations(half, k)
    res = merit(G, k, lev)
    steps = 0
    for steps in range(1, max_steps + 1):
        if res < tol:
            steps -= 1
            break
        H = strip_hessian(half, gx, k, k * w0, p)[idx][:, idx]
        dGdk = (-Kg / k ** 2 + Vg)[mask]
        grad0 = np.zeros(half.shape)
        grad0[0] = half_gradient(half[0], gx, p)
        row = grad0[mask]
        J = sp.bmat([[H, sp.csc_matrix(dGdk[:, None])],
                     [sp.csr_matrix(row[None, :]), None]], format="csc")
        rhs = -np.r_[G[mask], lev]
        try:
            step = spsolve(J, rhs, permc_spec="MMD_AT_PLUS_A")
        except RuntimeError:
            break
        if not np.all(np.isfinite(step)):
            break
        t = 1.0
        for _ in range(12):
            kt = k + t * step[-1]
            if kt > 0:
                trial = half.copy()
                trial[mask] += t * step[:-1]
                Gt, Kt, Vt, lt = equations(trial, kt)
                rt = merit(Gt, kt, lt)
                if rt < res:
                    break
            t *= 0.5
        else:
            break
        half, k, G, Kg, Vg, lev, res = trial, kt, Gt, Kt, Vt, lt, rt
    return BrakePolish(half=half, k=k, residual=res, level_gap=abs(lev), converged=res < tol,
                       n_steps=steps)


@dataclass
class ExtendedField:
    """A solution continued beyond the strip by reflection (periodic when a brake orbit)."""

    grid_x: Grid1D
    half: np.ndarray
    y: np.ndarray
    k: float
    periodic: bool
    seam_rows: tuple

    @property
    def values(self):
        return mirror(self.half)


@dataclass
class SolutionReport:
    c: float
    kind: str
    s_c: float
    t_c: float
    T_c: float
    energy_dev: float
    energy_dev_rel: float
    equipartition_gap: float
    equipartition_rel: float
    residual: float
    consistency_residual: float
    seam_residual: float
    neumann_left: float
    neumann_right: float
    seam_certified: bool
    phi_c: float
    converged: bool
    constraint_ok: bool
    extras: dict = field(default_factory=dict)

    def to_dict(self):
        def num(v):
            v = float(v)
            if math.isinf(v):
                return "inf" if v > 0 else "-inf"
            return v

        d = {
            "c": num(self.c), "kind": self.kind, "s_c": num(self.s_c), "t_c": num(self.t_c),
            "T_c": num(self.T_c), "energy_dev": num(self.energy_dev),
            "energy_dev_rel": num(self.energy_dev_rel),
            "equipartition_gap": num(self.equipartition_gap),
            "equipartition_rel": num(self.equipartition_rel),
            "residual": num(self.residual), "consistency_residual": num(self.consistency_residual),
            "seam_residual": num(self.seam_residual), "neumann_left": num(self.neumann_left),
            "neumann_right": num(self.neumann_right), "seam_certified": bool(self.seam_certified),
            "phi_c": num(self.phi_c), "converged": bool(self.converged),
            "constraint_ok": bool(self.constraint_ok),
        }
        d.update({k: (num(v) if isinstance(v, (int, float)) and not isinstance(v, bool) else v)
                  for k, v in self.extras.items()})
        return d


@dataclass
class EnergyAudit:
    energy_dev: float
    energy_dev_rel: float
    A: float
    B: float
    gap: float
    gap_rel: float


def energy_audit(metrics, turning, c):
    """max |E_j + c| strictly inside the turning interval, and the equipartition gap |A - B|."""
    n = len(metrics.y)
    lo = turning.s_index if turning.s_finite else 0
    hi = turning.t_index if turning.t_finite else n - 1
    inner = slice(lo + 1, hi)
    dev = float(np.max(np.abs(metrics.E[inner] + c))) if hi - lo > 1 else 0.0
    y = metrics.y[lo:hi + 1]
    A = float(np.trapezoid(metrics.kinetic[lo:hi + 1], y))
    B = float(np.trapezoid(metrics.V[lo:hi + 1] - c, y))
    gap = abs(A - B)
    scale = max(A, B)
    return EnergyAudit(energy_dev=dev, energy_dev_rel=dev / max(abs(c), 1e-300), A=A, B=B,
                       gap=gap, gap_rel=gap / scale if scale > 0 else 0.0)


def neumann_norms(half, k, gx):
    """Second-order one-sided ||d_y u|| at the first and last slice."""
    left = (-3.0 * half[0] + 4.0 * half[1] - half[2]) / (2.0 * k)
    right = (3.0 * half[-1] - 4.0 * half[-2] + half[-3]) / (2.0 * k)
    return float(np.sqrt(_l2sq(gx, left))), float(np.sqrt(_l2sq(gx, right)))


def reflect_even(half, about_last=True):
    """Even continuation of a slice stack about its last (or first) slice."""
    if about_last:
        return np.concatenate([half, half[-2::-1]], axis=0)
    return np.concatenate([half[:0:-1], half], axis=0)


def classify_and_extend(result, turning, c, p, q_minus, q_plus, neumann_tol=1e-3,
                        polish_tol=1e-9, extras=None):
    """Classify a converged strip field and continue it by reflection.

    Brake orbits are first re-solved on the turning interval with free
    spacing (``brake_polish``) so the reflected field satisfies the discrete
    equation at the seams; the period is then exactly twice the polished
    interval length.
    """
    u = result.field
    gx = u.grid.grid_x
    h = gx.h
    extras = dict(extras or {})
    if turning.s_finite and turning.t_finite:
        kind = BRAKE_ORBIT
        seg = u.half[turning.s_index:turning.t_index + 1]
        pol = brake_polish(seg, u.k, gx, p, c, tol=polish_tol)
        N = len(seg) - 1
        T = N * pol.k
        core = pol.half
        full = reflect_even(core)[:-1]
        y = np.arange(len(full) + 1) * pol.k
        period = np.concatenate([full, full[:1]], axis=0)
        ext = ExtendedField(gx, period, y, pol.k, True, (0, N))
        nl, nr = neumann_norms(core, pol.k, gx)
        vals = mirror(full)
        r5, off5 = residual_map(vals, h, pol.k, p, periodic=True, order=2)
        r4, off4 = residual_map(vals, h, pol.k, p, periodic=True, order=4)
        interior = np.ones(r4.shape[0], dtype=bool)
        interior[[0, N]] = False
        seam = float(r4[[0, N]].max())
        resid5 = float(r5.max())
        cons = float(r4[interior].max())
        met = slice_metrics(core, np.arange(N + 1) * pol.k, gx, p, c, q_minus, q_plus)
        en = energy_audit(met, Turning(0, N, 0.0, T), c)
        certified = nl <= neumann_tol and nr <= neumann_tol and pol.converged
        extras.update(brake_k=pol.k, brake_residual=pol.residual, brake_level_gap=pol.level_gap,
                      brake_converged=pol.converged, seam_residual_5pt=float(r5[[0, N]].max()),
                      period=2.0 * T, A=en.A, B=en.B, strip_converged=result.converged,
                      strip_residual=result.residual, strip_message=result.message)
        return SolutionReport(c=c, kind=kind, s_c=turning.s_c, t_c=turning.t_c, T_c=T,
                              energy_dev=en.energy_dev, energy_dev_rel=en.energy_dev_rel,
                              equipartition_gap=en.gap, equipartition_rel=en.gap_rel,
                              residual=resid5, consistency_residual=cons, seam_residual=seam,
                              neumann_left=nl, neumann_right=nr, seam_certified=certified,
                              phi_c=result.phi, converged=pol.converged,
                              constraint_ok=result.constraint_ok, extras=extras), ext, met

    met = field_metrics(u, p, c, q_minus, q_plus)
    en = energy_audit(met, turning, c)
    vals = u.values
    r5 = pde_residual(vals, h, u.k, p, order=2)
    if turning.s_finite or turning.t_finite:
        # one turning slice: keep the piece that reaches the infinite end, reflect at the other
        left_open = not turning.s_finite
        kind = HOMOCLINIC_LEFT if left_open else HOMOCLINIC_RIGHT
        if left_open:
            j = turning.t_index
            ext_half = reflect_even(u.half[:j + 1], about_last=True)
            seam_row = j
            y = u.y[0] + np.arange(len(ext_half)) * u.k
            right_n = neumann_norms(u.half[:j + 1], u.k, gx)[1]
            left_n = math.nan
        else:
            j = turning.s_index
            ext_half = reflect_even(u.half[j:], about_last=False)
            seam_row = len(u.half) - 1 - j
            y = u.y[-1] - np.arange(len(ext_half))[::-1] * u.k
            left_n = neumann_norms(u.half[j:], u.k, gx)[0]
            right_n = math.nan
        ext = ExtendedField(gx, ext_half, y, u.k, False, (seam_row,))
        r4, off = residual_map(mirror(ext_half), h, u.k, p, order=4)
        rows = np.arange(r4.shape[0]) + off[0]
        at_seam = rows == seam_row
        seam = float(r4[at_seam].max()) if at_seam.any() else 0.0
        cons = float(r4[~at_seam].max())
        T = math.inf
        certified = bool(np.nanmax([left_n, right_n]) <= neumann_tol)
    else:
        kind = HETEROCLINIC
        ext = ExtendedField(gx, u.half, u.y, u.k, False, ())
        cons = pde_residual(vals, h, u.k, p, order=4)
        seam = 0.0
        T = math.inf
        left_n = right_n = math.nan
        certified = True
    extras.update(dist_minus_end=float(met.dist_minus[0]), dist_plus_end=float(met.dist_plus[-1]),
                  A=en.A, B=en.B)
    return SolutionReport(c=c, kind=kind, s_c=turning.s_c, t_c=turning.t_c, T_c=T,
                          energy_dev=en.energy_dev, energy_dev_rel=en.energy_dev_rel,
                          equipartition_gap=en.gap, equipartition_rel=en.gap_rel, residual=r5,
                          consistency_residual=cons, seam_residual=seam, neumann_left=left_n,
                          neumann_right=right_n, seam_certified=certified, phi_c=result.phi,
                          converged=result.converged, constraint_ok=result.constraint_ok,
                          extras=extras), ext, met
