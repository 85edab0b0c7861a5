"""One-dimensional heteroclinic connections on a truncated symmetric grid.

A profile q: [-Lx, Lx] -> R^2 is stored on the right half-grid only; the left
half is its mirror image (q1 odd, q2 even), so the symmetric class is exact.
The discrete action is

    V(q) = sum_cells |q_{i+1} - q_i|^2 / (2h) + sum_nodes w_i W(q_i)

with trapezoid weights w_i.  Its gradient divided by the node weight is the
finite-difference Euler-Lagrange residual -D2 q + grad W(q).
"""
from __future__ import annotations

import logging
import math
import zlib
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.linalg import solve_banded
from scipy.sparse.linalg import eigsh, spsolve

from .errors import AtlasInconsistencyError, GeometryError, HypothesisError, NotAConnectionError
from .optim import lbfgs
from .potential import A_MINUS, A_PLUS, chi

log = logging.getLogger(__name__)

PLUS, MINUS, NEITHER = "Plus", "Minus", "Neither"


@dataclass(frozen=True)
class Grid1D:
    lx: float = 20.0
    n: int = 2001

    def __post_init__(self):
        if self.n % 2 == 0:
            raise ValueError(f"n must be odd so that x=0 is a node (got {self.n})")
        if self.n < 129:
            raise ValueError(f"n must be at least 129 (got {self.n})")
        if not self.lx > 0:
            raise ValueError("lx must be positive")

    @property
    def h(self):
        return 2.0 * self.lx / (self.n - 1)

    @property
    def nh(self):
        return (self.n + 1) // 2

    @property
    def center(self):
        return (self.n - 1) // 2

    @property
    def x(self):
        return np.linspace(-self.lx, self.lx, self.n)

    @property
    def half_x(self):
        return self.x[self.center:]

    @property
    def weights(self):
        """Quadrature weights of the half-grid (full-line integral of an even function)."""
        w = np.full(self.nh, 2.0 * self.h)
        w[0] = w[-1] = self.h
        return w

    @property
    def full_weights(self):
        w = np.full(self.n, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w

    def refined(self, factor=2):
        return Grid1D(self.lx, (self.n - 1) * factor + 1)


def mirror(half):
    """Full-grid array from right half-grid values (last axis = component)."""
    left = half[..., :0:-1, :].copy()
    left[..., 0] *= -1.0
    return np.concatenate([left, half], axis=-2)


def free_mask(nh):
    m = np.ones((nh, 2), dtype=bool)
    m[0, 0] = False
    m[-1, :] = False
    return m


# -- discrete action on half-grid arrays (batched over leading axes) --------


def half_action(Q, grid, p):
    dQ = np.diff(Q, axis=-2)
    kin = np.sum(dQ * dQ, axis=(-2, -1)) / grid.h
    pot = np.sum(grid.weights * p.value(Q), axis=-1)
    return kin + pot


def half_kinetic_grad(Q, h):
    g = np.zeros_like(Q)
    dQ = np.diff(Q, axis=-2)
    g[..., :-1, :] -= dQ
    g[..., 1:, :] += dQ
    return 2.0 * g / h


def half_gradient(Q, grid, p):
    return half_kinetic_grad(Q, grid.h) + grid.weights[:, None] * p.gradient(Q)


def half_residual(Q, grid, p):
    """-D2 q + grad W(q) at every half-grid node (center row uses the mirror ghost)."""
    return half_gradient(Q, grid, p) / grid.weights[:, None]


def kinetic_matrix(nh, h):
    """Sparse Hessian of the kinetic part in interleaved (node, component) ordering."""
    main = np.full(nh, 4.0 / h)
    main[0] = main[-1] = 2.0 / h
    off = np.full(nh - 1, -2.0 / h)
    T = sp.diags([off, main, off], [-1, 0, 1], format="csr")
    return sp.kron(T, sp.identity(2), format="csr")


def half_hessian(Q, grid, p):
    """Sparse Hessian of ``half_action`` with respect to all half-grid values."""
    nh = grid.nh
    H = p.hessian(Q) * grid.weights[:, None, None]
    blocks = sp.block_diag(list(H), format="csr")
    return kinetic_matrix(nh, grid.h) + blocks


def full_action(values, grid, p, lo=0, hi=None):
    """Trapezoid action of an arbitrary full-grid path on nodes [lo, hi]."""
    if hi is None:
        hi = grid.n - 1
    seg = values[lo:hi + 1]
    if len(seg) < 2:
        return 0.0
    d = np.diff(seg, axis=0)
    kin = 0.5 * np.sum(d * d) / grid.h
    w = np.full(len(seg), grid.h)
    w[0] = w[-1] = 0.5 * grid.h
    return float(kin + np.sum(w * p.value(seg)))


def full_gradient(values, grid, p):
    g = np.zeros_like(values)
    d = np.diff(values, axis=0)
    g[:-1] -= d
    g[1:] += d
    return g / grid.h + grid.full_weights[:, None] * p.gradient(values)


# -- profiles ---------------------------------------------------------------


class Profile:
    """A symmetric discretized path, held on the right half-grid."""

    def __init__(self, grid, half):
        half = np.array(half, dtype=float)
        if half.shape != (grid.nh, 2):
            raise ValueError(f"half-grid values must have shape {(grid.nh, 2)}, got {half.shape}")
        half[0, 0] = 0.0
        self.grid = grid
        self.half = half

    @classmethod
    def from_full(cls, grid, values, atol=1e-12):
        values = np.asarray(values, dtype=float)
        half = values[grid.center:]
        if not np.allclose(mirror(half), values, rtol=0, atol=atol):
            raise ValueError("values are not in the symmetric class (q1 odd, q2 even)")
        return cls(grid, half)

    @classmethod
    def ramp(cls, grid, width=1.0, bump=0.0, bump_width=1.0):
        x = grid.half_x
        half = np.zeros((grid.nh, 2))
        half[:, 0] = np.clip(x / width, -1.0, 1.0)
        half[:, 1] = bump * np.clip(1.0 - (x / bump_width) ** 2, 0.0, None) ** 2
        half[-1] = A_PLUS
        return cls(grid, half)

    @property
    def values(self):
        return mirror(self.half)

    @property
    def x(self):
        return self.grid.x

    def copy(self):
        return Profile(self.grid, self.half.copy())

    def action(self, p):
        return float(half_action(self.half, self.grid, p))

    def action_on(self, p, lo, hi):
        """Windowed action over the node range [lo, hi] of the full grid."""
        return full_action(self.values, self.grid, p, lo, hi)

    def residual(self, p):
        r = half_residual(self.half, self.grid, p)
        return float(np.max(np.abs(r[free_mask(self.grid.nh)])))

    def sign_ok(self):
        return bool(np.all(self.half[1:, 0] > 0))

    def boundary_gap(self):
        return float(np.linalg.norm(self.half[-1] - A_PLUS))


def action(q, p):
    return q.action(p)


def action_gradient(q, p):
    """Gradient of the full-grid discrete action at the mirrored profile (n x 2)."""
    return full_gradient(q.values, q.grid, p)


def reduced_gradient(q, p):
    return half_gradient(q.half, q.grid, p)[free_mask(q.grid.nh)]


def l2_norm(grid, diff_half):
    return float(np.sqrt(np.sum(grid.weights[:, None] * diff_half * diff_half)))


def h1_norm(grid, diff_half):
    d = np.diff(diff_half, axis=0)
    return float(np.sqrt(np.sum(grid.weights[:, None] * diff_half ** 2) + 2.0 * np.sum(d * d) / grid.h))


def l2_distance(a, b):
    return l2_norm(a.grid, a.half - b.half)


def h1_distance(a, b):
    return h1_norm(a.grid, a.half - b.half)


# -- symmetrization and truncation -------------------------------------------


def _reflect_about(values, pivot, grid, right):
    """Half-grid profile from the piece of ``values`` right (or left) of ``pivot``."""
    n, nh = grid.n, grid.nh
    half = np.empty((nh, 2))
    idx = pivot + np.arange(nh) if right else pivot - np.arange(nh)
    inside = (idx >= 0) & (idx < n)
    src = values[np.clip(idx, 0, n - 1)]
    if right:
        half[:] = src
        half[~inside] = A_PLUS
    else:
        half[:, 0] = -src[:, 0]
        half[:, 1] = src[:, 1]
        half[~inside] = A_PLUS
    half[0, 0] = 0.0
    half[-1] = A_PLUS
    return half


def symmetrize(values, grid, p, descend=True):
    """Map a connection on the full grid into the symmetric class without raising its action.

    The half on which the path is cheaper (to the right of the last node with
    q1 <= 0, or to the left of the first node with q1 >= 0) is kept and
    reflected.  On the truncated grid the reflected half can differ from the
    original piece by one cell; if the result is still more expensive than the
    input, a short monotone descent inside the symmetric class removes the
    excess.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.n, 2):
        raise ValueError(f"expected shape {(grid.n, 2)}")
    q1 = values[:, 0]
    nonneg = np.nonzero(q1 >= 0)[0]
    nonpos = np.nonzero(q1 <= 0)[0]
    if nonneg.size == 0 or nonpos.size == 0:
        raise NotAConnectionError("first component never changes sign")
    i_minus = int(nonneg[0])
    i_plus = int(nonpos[-1])
    total = full_action(values, grid, p)
    right_cost = full_action(values, grid, p, i_plus, grid.n - 1)
    left_cost = full_action(values, grid, p, 0, i_minus)
    if right_cost <= left_cost:
        half = _reflect_about(values, i_plus, grid, right=True)
    else:
        half = _reflect_about(values, i_minus, grid, right=False)
    out = Profile(grid, half)
    if descend and out.action(p) > total:
        out = _descend_below(out, p, total)
    return out


def _descend_below(q, p, target, max_steps=200):
    """Projected steepest descent in the symmetric class until action <= target."""
    grid = q.grid
    mask = free_mask(grid.nh)
    half = q.half.copy()
    f = half_action(half, grid, p)
    step = 0.5 * grid.h
    for _ in range(max_steps):
        if f <= target:
            break
        g = half_gradient(half, grid, p) / grid.weights[:, None]
        g[~mask] = 0.0
        for _ in range(50):
            trial = half - step * g
            trial[1:, 0] = np.maximum(trial[1:, 0], half[1:, 0] * 0.5)
            ft = half_action(trial, grid, p)
            if ft < f:
                half, f = trial, ft
                step *= 1.5
                break
            step *= 0.5
        else:
            break
    return Profile(grid, half)


def truncate_tail(q, t0, p, w_hi, delta_bar=None):
    """Cut ``q`` at node ``t0`` (full-grid index, x > 0) and bridge linearly to a+ over unit length.

    Returns ``(q_tilde, lhs, rhs)`` where ``lhs`` is the action of the cut path
    before re-symmetrization and ``rhs = V_(-Lx, t0](q) + delta^2/2 (1 + 2 w_hi)``.
    """
    grid = q.grid
    x = grid.x
    if x[t0] <= 0:
        raise GeometryError("t0 must lie to the right of the origin")
    if x[t0] + 1.0 > grid.lx:
        raise GeometryError(f"t0 = {x[t0]:.4g} leaves no room for the unit bridge before Lx = {grid.lx}")
    vals = q.values
    q0 = vals[t0]
    delta = float(np.linalg.norm(q0 - A_PLUS))
    if delta_bar is not None and delta >= 2.0 * delta_bar:
        raise GeometryError(f"|q(t0) - a+| = {delta:.3g} is not below 2*delta_bar")
    out = vals.copy()
    s = np.clip(x[t0:] - x[t0], 0.0, 1.0)
    out[t0:] = (1.0 - s)[:, None] * q0 + s[:, None] * A_PLUS
    lhs = full_action(out, grid, p)
    rhs = q.action_on(p, 0, t0) + 0.5 * delta ** 2 * (1.0 + 2.0 * w_hi)
    return symmetrize(out, grid, p), lhs, rhs


# -- minimization ---------------------------------------------------------------


@dataclass
class MinimizeResult:
    profile: Profile
    action: float
    residual: float
    converged: bool
    n_iter: int
    sign_projected: bool = False
    action_history: list = field(default_factory=list)
    message: str = ""


def _banded_preconditioner(grid, shift):
    """Inverse of kinetic Hessian + shift * weights, per component, on the free set."""
    nh, h = grid.nh, grid.h
    w = grid.weights
    mask = free_mask(nh)
    solvers = []
    for comp in range(2):
        nodes = np.nonzero(mask[:, comp])[0]
        m = nodes.size
        diag = np.full(m, 4.0 / h)
        if nodes[0] == 0:
            diag[0] = 2.0 / h
        diag = diag + shift * w[nodes]
        ab = np.zeros((3, m))
        ab[0, 1:] = -2.0 / h
        ab[1] = diag
        ab[2, :-1] = -2.0 / h
        solvers.append((nodes, ab))
    layout = np.zeros((nh, 2), dtype=int)
    layout[mask] = np.arange(mask.sum())

    def apply(v):
        out = np.empty_like(v)
        for comp, (nodes, ab) in enumerate(solvers):
            ids = layout[nodes, comp]
            out[ids] = solve_banded((1, 1), ab, v[ids])
        return out

    return apply


def newton_polish(Q, grid, p, tol, max_steps=25):
    """Sparse Newton steps on the free values; each step must shrink the residual."""
    mask = free_mask(grid.nh)
    idx = np.nonzero(mask.ravel())[0]
    w = np.broadcast_to(grid.weights[:, None], (grid.nh, 2))[mask]
    Q = Q.copy()
    g = half_gradient(Q, grid, p)[mask]
    res = float(np.max(np.abs(g / w)))
    for _ in range(max_steps):
        if res < tol:
            break
        H = half_hessian(Q, grid, p)[idx][:, idx]
        try:
            step = spsolve(H.tocsc(), -g)
        except RuntimeError:
            break
        if not np.all(np.isfinite(step)):
            break
        trial = Q.copy()
        trial[mask] += step
        gt = half_gradient(trial, grid, p)[mask]
        rt = float(np.max(np.abs(gt / w)))
        if not rt < res:
            break
        Q, g, res = trial, gt, rt
    return Q, res


def well_shift(p):
    ev = np.linalg.eigvalsh(p.hessian(A_PLUS))
    return max(float(ev.min()), 1e-3)


def minimize(seed, p, el_tol=1e-8, max_iter=5000, history=20, polish_below=1e-4):
    """L-BFGS descent of the discrete action in the symmetric class.

    Boundary nodes stay clamped at a+/a-.  Stops when the Euler-Lagrange
    residual max-norm drops below ``el_tol``; once the residual is under
    ``polish_below`` the remaining digits come from Newton steps, since near
    machine precision the action no longer ranks line-search trials.  If the
    converged path breaks the
    sign condition q1(x) x > 0, the offending values are projected and the
    descent is repeated once.
    """
    grid = seed.grid
    mask = free_mask(grid.nh)
    wfree = np.broadcast_to(grid.weights[:, None], (grid.nh, 2))[mask]
    base = seed.half.copy()
    base[-1] = A_PLUS
    precond = _banded_preconditioner(grid, well_shift(p))

    def fun_grad(xv):
        Q = base.copy()
        Q[mask] = xv
        return float(half_action(Q, grid, p)), half_gradient(Q, grid, p)[mask]

    def residual(g):
        return float(np.max(np.abs(g / wfree)))

    history_all = []
    projected = False
    x0 = base[mask]
    for attempt in range(2):
        res = lbfgs(fun_grad, x0, residual, max(el_tol, polish_below), precond=precond,
                    max_iter=max_iter, history=history)
        Q = base.copy()
        Q[mask] = res.x
        if res.residual < polish_below:
            Q, r_pol = newton_polish(Q, grid, p, el_tol)
            f_pol = float(half_action(Q, grid, p))
            if r_pol >= el_tol or f_pol > res.f + 1e-12 * max(1.0, abs(res.f)):
                res = lbfgs(fun_grad, Q[mask], residual, el_tol, precond=precond,
                            max_iter=max_iter, history=history)
                Q[mask] = res.x
            else:
                res.f, res.residual, res.converged, res.message = f_pol, r_pol, True, "converged"
                res.f_history.append(f_pol)
        history_all.extend(res.f_history if not history_all else res.f_history[1:])
        if np.all(Q[1:, 0] > 0) or attempt == 1:
            break
        projected = True
        Q[1:, 0] = np.maximum(Q[1:, 0], 1e-6)
        x0 = Q[mask]
    prof = Profile(grid, Q)
    converged = res.converged and prof.sign_ok()
    msg = res.message if prof.sign_ok() else "sign condition violated after projection"
    return MinimizeResult(profile=prof, action=res.f, residual=res.residual, converged=converged,
                          n_iter=res.n_iter, sign_projected=projected,
                          action_history=history_all, message=msg)


# -- minimizer atlas ----------------------------------------------------------


BASE_AMPLITUDES = (0.0, 0.25, -0.25, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0)


def seed_schedule(n_starts, label="strata"):
    """Deterministic (amplitude, bump width, ramp width) triples."""
    out = [(a, 1.0, 1.0) for a in BASE_AMPLITUDES[:n_starts]]
    rng = np.random.default_rng(zlib.crc32(label.encode()))
    while len(out) < n_starts:
        out.append((float(rng.uniform(-2.0, 2.0)), float(rng.uniform(0.5, 3.0)),
                    float(rng.uniform(0.5, 3.0))))
    return out


@dataclass
class AtlasRun:
    index: int
    amplitude: float
    bump_width: float
    ramp_width: float
    action: float
    residual: float
    converged: bool
    n_iter: int
    cluster: int = -1


@dataclass
class HeteroclinicAtlas:
    potential: object
    grid: Grid1D
    m: float
    minimizers: list
    cluster_actions: list
    clusters: list
    distances: np.ndarray
    d0: float
    m_star: float
    star_holds: bool
    nu_measured: dict
    gap: float
    hypothesis: object
    runs: list
    el_tol: float
    cluster_eps: float
    atlas_window: float
    spread: float = 0.0

    @property
    def n_clusters(self):
        return len(self.minimizers)

    @property
    def q_minus(self):
        return self.minimizers[0]

    @property
    def q_plus(self):
        return self.minimizers[-1]

    def el_residuals(self):
        return [q.residual(self.potential) for q in self.minimizers]

    def on_grid(self, grid):
        """The same atlas with representatives re-minimized on another grid.

        m and d0 are recomputed there; the measured gap m_star - m is kept.
        """
        if grid == self.grid:
            return self
        p = self.potential
        reps = [regrid(q, grid, p, self.el_tol) for q in self.minimizers]
        acts = [q.action(p) for q in reps]
        k = len(reps)
        D = np.array([[l2_distance(a, b) for b in reps] for a in reps])
        d0 = float(D[np.triu_indices(k, 1)].min()) / 5.0 if k > 1 else 0.0
        m = min(acts)
        out = HeteroclinicAtlas(
            potential=p, grid=grid, m=m, minimizers=reps, cluster_actions=acts,
            clusters=self.clusters, distances=D, d0=d0, m_star=m + (self.m_star - self.m),
            star_holds=self.star_holds, nu_measured=self.nu_measured, gap=self.gap,
            hypothesis=self.hypothesis, runs=self.runs, el_tol=self.el_tol,
            cluster_eps=self.cluster_eps, atlas_window=self.atlas_window, spread=self.spread,
        )
        return out


def _cluster_order_key(q):
    return float(np.sum(q.grid.weights * q.half[:, 1]))


def min_on_sphere(center, r, p, n_dirs=3, el_tol=1e-7, max_iter=2000):
    """Smallest discrete action on the H1 sphere of radius r about ``center``."""
    grid = center.grid
    mask = free_mask(grid.nh)
    Hfull = half_hessian(center.half, grid, p)
    idx = np.nonzero(mask.ravel())[0]
    H = Hfull[idx][:, idx]
    G = (kinetic_matrix(grid.nh, grid.h) + sp.diags(np.repeat(grid.weights, 2)))[idx][:, idx]
    k = min(n_dirs, len(idx) - 2)
    # fixed start vector: ARPACK otherwise draws a random one and the gap is not reproducible
    v0 = np.ones(len(idx))
    _, vecs = eigsh(H.tocsc(), k=k, M=G.tocsc(), sigma=-1e-6, which="LM", v0=v0)
    base = center.half.copy()
    Gc = G.tocsr()

    def fun_grad(v):
        s = math.sqrt(v @ (Gc @ v))
        Q = base.copy()
        Q[mask] += r * v / s
        f = float(half_action(Q, grid, p))
        g = half_gradient(Q, grid, p)[mask]
        Gv = Gc @ v
        gv = (r / s) * (g - (v @ g) * Gv / s ** 2)
        return f, gv

    wfree = np.broadcast_to(grid.weights[:, None], (grid.nh, 2))[mask]
    best = np.inf
    for j in range(vecs.shape[1]):
        for sign in (1.0, -1.0):
            v0 = sign * vecs[:, j]
            res = lbfgs(fun_grad, v0, lambda g: float(np.max(np.abs(g / wfree))), el_tol,
                        max_iter=max_iter)
            best = min(best, res.f)
    return best


def build_atlas(p, grid=None, n_starts=10, el_tol=1e-8, cluster_eps=None, atlas_window=None,
                hypothesis=None, seed_label="strata", max_iter=5000, nu_radii=None):
    """Multistart minimization, clustering of the minimizers and the (*) verdict."""
    from .potential import estimate_constants

    if n_starts < 8:
        raise ValueError("n_starts must be at least 8")
    grid = grid or Grid1D()
    if cluster_eps is None:
        cluster_eps = 0.1 * float(np.linalg.norm(A_PLUS - A_MINUS))
    hypothesis = hypothesis or estimate_constants(p)
    runs, profiles = [], []
    for i, (amp, bw, rw) in enumerate(seed_schedule(n_starts, seed_label)):
        seed = Profile.ramp(grid, width=rw, bump=amp, bump_width=bw)
        res = minimize(seed, p, el_tol=el_tol, max_iter=max_iter)
        runs.append(AtlasRun(i, amp, bw, rw, res.action, res.residual, res.converged, res.n_iter))
        profiles.append(res.profile)
        log.info("start %d amp=%+.3f action=%.10f res=%.2e conv=%s", i, amp, res.action,
                 res.residual, res.converged)
    good = [r for r in runs if r.converged]
    if not good:
        raise HypothesisError("no multistart run converged; the atlas is empty")
    m = min(r.action for r in good)
    if atlas_window is None:
        atlas_window = 1e-6 * max(1.0, abs(m))
    members = [r for r in good if r.action <= m + atlas_window]
    others = [r for r in good if r.action > m + atlas_window]

    if len(members) == 1:
        labels = np.array([1])
    else:
        X = np.array([profiles[r.index].half.ravel() for r in members])
        sw = np.sqrt(np.repeat(grid.weights, 2))
        Z = linkage(X * sw, method="single", metric="euclidean")
        labels = fcluster(Z, t=cluster_eps, criterion="distance")
    groups = {}
    for r, lab in zip(members, labels):
        groups.setdefault(int(lab), []).append(r)
    reps = []
    for lab, rs in groups.items():
        best = min(rs, key=lambda r: (r.action, r.index))
        reps.append((profiles[best.index], best.action, [r.index for r in rs]))
    reps.sort(key=lambda t: _cluster_order_key(t[0]))
    for cid, (_, _, idxs) in enumerate(reps):
        for i in idxs:
            runs[i].cluster = cid
    minimizers = [t[0] for t in reps]
    k = len(minimizers)
    D = np.zeros((k, k))
    for a in range(k):
        for b in range(k):
            D[a, b] = l2_distance(minimizers[a], minimizers[b])
    spread = 0.0
    for _, _, idxs in reps:
        for i in idxs:
            for j in idxs:
                spread = max(spread, l2_distance(profiles[i], profiles[j]))
    d0 = float(D[np.triu_indices(k, 1)].min()) / 5.0 if k > 1 else 0.0
    star = k == 2 and d0 > 0 and spread < d0

    nu = {}
    if star:
        radii = nu_radii or (0.25 * d0, 0.5 * d0, d0)
        for r in radii:
            nu[float(r)] = min(min_on_sphere(q, r, p) for q in minimizers) - m
        gap = nu[float(max(radii))]
    else:
        gap = min((r.action for r in others), default=m + hypothesis.lambda0) - m
    m_star = m + 0.5 * gap
    atlas = HeteroclinicAtlas(
        potential=p, grid=grid, m=m, minimizers=minimizers,
        cluster_actions=[t[1] for t in reps], clusters=[t[2] for t in reps], distances=D,
        d0=d0, m_star=m_star, star_holds=star, nu_measured=nu, gap=gap, hypothesis=hypothesis,
        runs=runs, el_tol=el_tol, cluster_eps=cluster_eps, atlas_window=atlas_window,
        spread=spread,
    )
    return atlas


def classify_sublevel(atlas, q, c, v_tol=0.0):
    """Which sublevel component of {V <= c} contains ``q``, if any."""
    if not atlas.star_holds:
        raise HypothesisError("sublevel components need hypothesis (*) to hold")
    if not (atlas.m - 1e-12 <= c <= atlas.m_star + 1e-12):
        raise ValueError(f"c = {c} outside [m, m_star]")
    p = atlas.potential
    if q.action(p) > c + v_tol:
        return NEITHER
    dm = h1_distance(q, atlas.q_minus)
    dp = h1_distance(q, atlas.q_plus)
    inm, inp = dm <= atlas.d0, dp <= atlas.d0
    if inm and inp:
        raise AtlasInconsistencyError("profile lies within d0 of both clusters; check cluster_eps")
    if inp:
        return PLUS
    if inm:
        return MINUS
    return NEITHER


def regrid(q, grid, p, el_tol=1e-8):
    """Interpolate ``q`` onto another grid and re-minimize there."""
    half = np.empty((grid.nh, 2))
    for comp in range(2):
        half[:, comp] = np.interp(grid.half_x, q.grid.half_x, q.half[:, comp],
                                  right=A_PLUS[comp])
    res = minimize(Profile(grid, half), p, el_tol=el_tol)
    if not res.converged:
        raise HypothesisError(f"re-minimization on the n={grid.n} grid did not converge")
    return res.profile
