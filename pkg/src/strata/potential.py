"""Symmetric double-well potentials on the plane and the audit of their constants.

Every potential vanishes exactly at ``a_minus = (-1, 0)`` and ``a_plus = (1, 0)``
and is even in the first coordinate.  Values, gradients and Hessians are
vectorized over arrays of points with trailing dimension 2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .errors import DomainError, HypothesisError

A_MINUS = np.array([-1.0, 0.0])
A_PLUS = np.array([1.0, 0.0])

GINZBURG_LANDAU = "GinzburgLandau"
CHANNEL = "Channel"
USER_TABLE = "UserTable"


def _check(points):
    u = np.asarray(points, dtype=float)
    if u.shape[-1] != 2:
        raise DomainError(f"points must have trailing dimension 2, got shape {u.shape}")
    if not np.all(np.isfinite(u)):
        raise DomainError("non-finite point passed to potential")
    return u


@dataclass(frozen=True)
class Potential:
    """A double-well density W on R^2.

    ``params`` holds ``(delta_ch, eps_w)`` for the channel family and is empty
    for Ginzburg-Landau.  Table potentials keep their spline in ``table``.
    """

    kind: str
    params: tuple = ()
    table: Optional[RectBivariateSpline] = field(default=None, compare=False, repr=False)
    zero: bool = field(default=False, compare=False, repr=False)

    minima = (A_MINUS, A_PLUS)

    @classmethod
    def ginzburg_landau(cls):
        return cls(GINZBURG_LANDAU)

    @classmethod
    def channel(cls, delta_ch=0.9, eps_w=0.05):
        if not delta_ch > 0:
            raise ValueError("delta_ch must be positive")
        if eps_w < 0:
            raise ValueError("eps_w must be nonnegative")
        return cls(CHANNEL, (float(delta_ch), float(eps_w)))

    @classmethod
    def from_table(cls, x1, x2, values):
        """Bicubic spline through tabulated values on a rectangular grid.

        The table is symmetrized in ``x1`` before fitting, so ``x1`` must be
        symmetric about zero.
        """
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        values = np.asarray(values, dtype=float)
        if values.shape != (x1.size, x2.size):
            raise ValueError("values must have shape (len(x1), len(x2))")
        if not np.allclose(x1, -x1[::-1]):
            raise ValueError("x1 nodes must be symmetric about 0")
        values = 0.5 * (values + values[::-1, :])
        spline = RectBivariateSpline(x1, x2, values, kx=3, ky=3, s=0)
        return cls(USER_TABLE, (), table=spline)

    def without_potential(self):
        """Same object with W replaced by zero (kinetic-only test hook)."""
        return Potential(self.kind, self.params, self.table, zero=True)

    @property
    def label(self):
        if self.kind == CHANNEL:
            return f"channel(delta_ch={self.params[0]:g}, eps_w={self.params[1]:g})"
        if self.kind == GINZBURG_LANDAU:
            return "gl"
        return "table"

    # -- evaluation -------------------------------------------------------

    def value(self, points):
        u = _check(points)
        u1, u2 = u[..., 0], u[..., 1]
        if self.zero:
            return np.zeros(u.shape[:-1])
        if self.kind == GINZBURG_LANDAU:
            a = u1 * u1 - u2 * u2 - 1.0
            b = 2.0 * u1 * u2
            return 0.25 * (a * a + b * b)
        if self.kind == CHANNEL:
            d, e = self.params
            s = u1 * u1 - 1.0
            g = u2 * u2 + d * s
            return s * s + g * g + e * u2 * u2
        return self.table.ev(u1, u2)

    def gradient(self, points):
        u = _check(points)
        u1, u2 = u[..., 0], u[..., 1]
        out = np.empty(u.shape)
        if self.zero:
            out[...] = 0.0
        elif self.kind == GINZBURG_LANDAU:
            a = u1 * u1 - u2 * u2 - 1.0
            b = 2.0 * u1 * u2
            out[..., 0] = a * u1 + b * u2
            out[..., 1] = b * u1 - a * u2
        elif self.kind == CHANNEL:
            d, e = self.params
            s = u1 * u1 - 1.0
            g = u2 * u2 + d * s
            out[..., 0] = 4.0 * u1 * s + 4.0 * d * u1 * g
            out[..., 1] = 4.0 * u2 * g + 2.0 * e * u2
        else:
            out[..., 0] = self.table.ev(u1, u2, dx=1)
            out[..., 1] = self.table.ev(u1, u2, dy=1)
        return out

    def hessian(self, points):
        u = _check(points)
        u1, u2 = u[..., 0], u[..., 1]
        out = np.empty(u.shape + (2,))
        if self.zero:
            out[...] = 0.0
        elif self.kind == GINZBURG_LANDAU:
            a = u1 * u1 - u2 * u2 - 1.0
            r2 = 2.0 * (u1 * u1 + u2 * u2)
            out[..., 0, 0] = a + r2
            out[..., 1, 1] = r2 - a
            out[..., 0, 1] = out[..., 1, 0] = 2.0 * u1 * u2
        elif self.kind == CHANNEL:
            d, e = self.params
            s = u1 * u1 - 1.0
            g = u2 * u2 + d * s
            out[..., 0, 0] = 12.0 * u1 * u1 - 4.0 + 4.0 * d * g + 8.0 * d * d * u1 * u1
            out[..., 1, 1] = 4.0 * g + 8.0 * u2 * u2 + 2.0 * e
            out[..., 0, 1] = out[..., 1, 0] = 8.0 * d * u1 * u2
        else:
            out[..., 0, 0] = self.table.ev(u1, u2, dx=2)
            out[..., 1, 1] = self.table.ev(u1, u2, dy=2)
            out[..., 0, 1] = out[..., 1, 0] = self.table.ev(u1, u2, dx=1, dy=1)
        return out


def chi(points):
    """Distance to the nearer of the two wells."""
    u = np.asarray(points, dtype=float)
    return np.minimum(np.linalg.norm(u - A_MINUS, axis=-1), np.linalg.norm(u - A_PLUS, axis=-1))


def parse_potential(name, delta_ch=0.9, eps_w=0.05):
    if name == "gl":
        return Potential.ginzburg_landau()
    if name == "channel":
        return Potential.channel(delta_ch, eps_w)
    raise ValueError(f"unknown potential '{name}' (expected gl or channel)")


# -- hypothesis constants --------------------------------------------------


@dataclass
class HypothesisReport:
    R: float
    mu0: float
    delta_bar: float
    w_lo: float
    w_hi: float
    delta0: float
    lambda0: float
    omega_r: list
    grid_n: int
    search_box: tuple

    def omega(self, r):
        """Grid estimate of omega_r, taking the first tabulated radius >= r."""
        for radius, value in self.omega_r:
            if radius >= r:
                return value
        return self.omega_r[-1][1]

    def ratio_condition(self):
        lhs = self.delta0 / (self.delta_bar - self.delta0)
        rhs = 2.0 * math.sqrt(2.0 * self.w_lo) / (1.0 + 2.0 * self.w_hi)
        return lhs < rhs

    def to_dict(self):
        return {
            "R": self.R,
            "mu0": self.mu0,
            "delta_bar": self.delta_bar,
            "w_lo": self.w_lo,
            "w_hi": self.w_hi,
            "delta0": self.delta0,
            "lambda0": self.lambda0,
            "omega_r": [[float(r), float(w)] for r, w in self.omega_r],
            "grid_n": self.grid_n,
            "search_box": [list(map(float, b)) for b in self.search_box],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            R=d["R"], mu0=d["mu0"], delta_bar=d["delta_bar"], w_lo=d["w_lo"], w_hi=d["w_hi"],
            delta0=d["delta0"], lambda0=d["lambda0"],
            omega_r=[tuple(p) for p in d["omega_r"]],
            grid_n=d.get("grid_n", 0), search_box=tuple(tuple(b) for b in d.get("search_box", ())),
        )


def _ball_samples(center, radius, n):
    r = np.linspace(0.0, radius, n)
    t = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    rr, tt = np.meshgrid(r, t, indexing="ij")
    pts = np.stack([center[0] + rr * np.cos(tt), center[1] + rr * np.sin(tt)], axis=-1)
    return pts.reshape(-1, 2)


def _hessian_eigs(p, pts):
    return np.linalg.eigvalsh(p.hessian(pts))


def optimal_delta0(delta_bar, w_lo, w_hi):
    """Maximizer of lambda0(delta0) on (0, delta_bar) and the maximum."""
    a = math.sqrt(2.0 * w_lo)
    b = 0.5 * (1.0 + 2.0 * w_hi)
    delta0 = a * delta_bar / (2.0 * (a + b))
    lam = a * delta0 * (delta_bar - delta0) - b * delta0 * delta0
    return delta0, lam


def estimate_constants(p, search_box=((-3.0, 3.0), (-3.0, 3.0)), grid_n=256,
                       radii=(0.25, 0.5, 1.0, 2.0)):
    """Grid estimates of the structural constants of a double-well potential."""
    if grid_n < 64:
        raise ValueError("grid_n must be at least 64")
    (x0, x1), (y0, y1) = search_box
    gx, gy = np.meshgrid(np.linspace(x0, x1, grid_n), np.linspace(y0, y1, grid_n), indexing="ij")
    pts = np.stack([gx, gy], axis=-1).reshape(-1, 2)
    W = p.value(pts)
    radius = np.linalg.norm(pts, axis=-1)

    R = mu0 = None
    rmax = min(abs(x0), abs(x1), abs(y0), abs(y1))
    for cand in np.arange(2.0, max(rmax, 2.0) + 1e-12, 0.25):
        outside = radius > cand
        if not outside.any():
            break
        inf = float(W[outside].min())
        if inf > 0:
            R, mu0 = float(cand), inf
            break
    if R is None:
        raise HypothesisError("(W2) fails on the audit box: W vanishes outside every radius >= 2")

    delta_bar = None
    for level in range(3, 31):
        cand = 2.0 ** -level
        eigs = np.concatenate([_hessian_eigs(p, _ball_samples(a, 2.0 * cand, grid_n // 4))
                               for a in (A_MINUS, A_PLUS)])
        if eigs.min() > 0:
            delta_bar = cand
            w_lo = 0.25 * float(eigs.min())
            w_hi = 0.25 * float(eigs.max())
            break
    if delta_bar is None:
        raise HypothesisError("(W1) fails: Hessian is not positive definite near the wells")

    delta0, lambda0 = optimal_delta0(delta_bar, w_lo, w_hi)

    near = np.concatenate([_ball_samples(a, max(radii), grid_n // 2) for a in (A_MINUS, A_PLUS)])
    allpts = np.concatenate([pts, near])
    c = chi(allpts)
    keep = c > 0
    ratio = p.value(allpts[keep]) / c[keep] ** 2
    ck = c[keep]
    omega = [(float(r), float(ratio[ck <= r].min())) for r in sorted(radii)]

    return HypothesisReport(R=R, mu0=mu0, delta_bar=delta_bar, w_lo=w_lo, w_hi=w_hi,
                            delta0=delta0, lambda0=lambda0, omega_r=omega,
                            grid_n=grid_n, search_box=tuple(tuple(b) for b in search_box))


def audit_minima(p, search_box=((-3.0, 3.0), (-3.0, 3.0)), grid_n=257, floor=1e-12, radius=1e-6):
    """True when W >= 0 on the grid and W < floor only within ``radius`` of a well."""
    (x0, x1), (y0, y1) = search_box
    gx, gy = np.meshgrid(np.linspace(x0, x1, grid_n), np.linspace(y0, y1, grid_n), indexing="ij")
    pts = np.stack([gx, gy], axis=-1).reshape(-1, 2)
    W = p.value(pts)
    if W.min() < 0:
        return False
    small = W < floor
    return bool(np.all(chi(pts[small]) < radius))
