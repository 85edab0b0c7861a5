"""Two-loop L-BFGS with backtracking Armijo line search.

The initial inverse-Hessian guess is supplied as a callable ``precond(g)``
returning an approximation of H^{-1} g, so both the banded 1-D operator and the
sparse 2-D factorization plug in without copying.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np


@dataclass
class OptimResult:
    x: np.ndarray
    f: float
    residual: float
    n_iter: int
    converged: bool
    f_history: list = field(default_factory=list)
    message: str = ""


def lbfgs(fun_grad, x0, residual, tol, precond=None, max_iter=5000, history=20,
          c1=1e-4, max_backtrack=60, callback=None, stall_window=200):
    """Minimize ``fun_grad`` from ``x0``.

    ``residual(g)`` maps a gradient to the scalar used for the stopping test
    ``residual(g) < tol``.  The objective is non-increasing over accepted
    steps up to roundoff; a failed line search ends the run unconverged, and
    so does a run whose residual has not improved in ``stall_window`` steps.
    """
    x = np.array(x0, dtype=float)
    f, g = fun_grad(x)
    hist = [f]
    S, Y, RHO = deque(maxlen=history), deque(maxlen=history), deque(maxlen=history)
    apply_h0 = precond if precond is not None else (lambda v: v)
    res = residual(g)
    best_res = res
    since_best = 0
    flat = 8.0 * np.finfo(float).eps
    it = 0
    msg = "converged"
    while res >= tol:
        if it >= max_iter:
            msg = "iteration cap"
            break
        q = g.copy()
        alphas = []
        for s, y, rho in zip(reversed(S), reversed(Y), reversed(RHO)):
            a = rho * s.dot(q)
            alphas.append(a)
            q -= a * y
        r = apply_h0(q)
        if S and precond is None:
            r *= S[-1].dot(Y[-1]) / Y[-1].dot(Y[-1])
        for (s, y, rho), a in zip(zip(S, Y, RHO), reversed(alphas)):
            b = rho * y.dot(r)
            r += (a - b) * s
        d = -r
        slope = g.dot(d)
        if not slope < 0:
            S.clear(); Y.clear(); RHO.clear()
            d = -apply_h0(g)
            slope = g.dot(d)
            if not slope < 0:
                msg = "no descent direction"
                break
        step = 1.0
        for _ in range(max_backtrack):
            xn = x + step * d
            fn, gn = fun_grad(xn)
            if np.isfinite(fn) and fn <= f + c1 * step * slope:
                break
            # at roundoff level the action cannot rank steps; fall back on the residual
            if np.isfinite(fn) and fn <= f + flat * abs(f) and residual(gn) < res:
                break
            step *= 0.5
        else:
            msg = "line search failed"
            break
        s = xn - x
        y = gn - g
        sy = s.dot(y)
        if sy > 1e-14 * np.sqrt(s.dot(s) * y.dot(y)):
            S.append(s); Y.append(y); RHO.append(1.0 / sy)
        x, f, g = xn, fn, gn
        hist.append(f)
        res = residual(g)
        it += 1
        if callback is not None:
            callback(x, f, g)
        if res < best_res:
            best_res, since_best = res, 0
        else:
            since_best += 1
        if since_best >= stall_window:
            msg = "stalled"
            break
    return OptimResult(x=x, f=f, residual=res, n_iter=it, converged=res < tol,
                       f_history=hist, message=msg)
