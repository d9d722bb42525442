"""Limited-memory BFGS with monotone backtracking line search.

Used for the smooth block of every ADMM iteration (intercepts, thresholds
and the working coefficient copy). A contiguous block of the parameter
vector may be declared *ordered*; it is optimized as
``(z1, log(z2 - z1), ..., log(z_m - z_{m-1}))`` so every iterate keeps the
block strictly increasing.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

# log-gaps below this are frozen; exp(-30) ~ 1e-13 keeps gaps above float spacing
LOG_GAP_FLOOR = -30.0


@dataclass(frozen=True)
class SmoothSolveSettings:
    max_inner_iter: int = 500
    grad_tol: float = 1e-6
    loose_tol: float = 1e-4
    memory: int = 10
    armijo: float = 1e-4
    backtrack: float = 0.5
    max_backtrack: int = 60

    def __post_init__(self):
        if self.max_inner_iter < 1:
            raise ValueError("max_inner_iter must be >= 1")
        if not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")
        if self.loose_tol < self.grad_tol:
            raise ValueError("loose_tol must be >= grad_tol")


@dataclass
class SmoothResult:
    x: np.ndarray
    fun: float
    grad_norm: float
    iterations: int
    converged: bool
    trace: list = field(default_factory=list)


class _Reparam:
    def __init__(self, ordered: slice | None, size: int):
        if ordered is None:
            self.sl = None
        else:
            start, stop, step = ordered.indices(size)
            if step != 1:
                raise ValueError("ordered block must be contiguous")
            self.sl = slice(start, stop)

    def to_free(self, x):
        r = np.array(x, dtype=float)
        if self.sl is not None and r[self.sl].size > 1:
            z = r[self.sl]
            gaps = np.diff(z)
            if np.any(gaps <= 0):
                raise ValueError("ordered block of the start point is not strictly increasing")
            r[self.sl] = np.concatenate(([z[0]], np.maximum(np.log(gaps), LOG_GAP_FLOOR)))
        return r

    def to_natural(self, r):
        x = np.array(r, dtype=float)
        if self.sl is not None and x[self.sl].size > 1:
            w = r[self.sl]
            x[self.sl] = np.cumsum(np.concatenate(([w[0]], np.exp(np.maximum(w[1:], LOG_GAP_FLOOR)))))
        return x

    def grad_to_free(self, r, g):
        g = np.array(g, dtype=float)
        if self.sl is not None and g[self.sl].size > 1:
            w = r[self.sl]
            tail = np.cumsum(g[self.sl][::-1])[::-1]
            gw = np.empty_like(tail)
            gw[0] = tail[0]
            gw[1:] = np.where(w[1:] > LOG_GAP_FLOOR, np.exp(w[1:]) * tail[1:], 0.0)
            g[self.sl] = gw
        return g


def _two_loop(g, pairs):
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * (s @ q)
        alphas.append(a)
        q -= a * y
    s, y, _ = pairs[-1]
    q *= (s @ y) / (y @ y)
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * (y @ q)
        q += (a - b) * s
    return q


def minimize_smooth(
    fun: Callable[[np.ndarray], tuple[float, np.ndarray]],
    x0,
    settings: SmoothSolveSettings | None = None,
    *,
    ordered: slice | None = None,
    grad_tol: float | None = None,
    history: deque | None = None,
) -> SmoothResult:
    """Minimize a smooth function given as ``fun(x) -> (value, gradient)``.

    Stops when the sup-norm of the gradient (in the optimization coordinates)
    drops to ``grad_tol`` or after ``max_inner_iter`` iterations. Accepted
    steps satisfy the Armijo condition, so the objective never increases.

    ``history`` is an optional deque of curvature pairs that is read and
    updated in place. Passing the same deque to a sequence of problems that
    differ only by linear terms (as the ADMM subproblems do) reuses the
    Hessian approximation.
    """
    settings = settings or SmoothSolveSettings()
    tol = settings.grad_tol if grad_tol is None else grad_tol
    x0 = np.asarray(x0, dtype=float)
    rp = _Reparam(ordered, x0.size)

    def free_fun(r):
        f, g = fun(rp.to_natural(r))
        return float(f), rp.grad_to_free(r, g)

    r = rp.to_free(x0)
    f, g = free_fun(r)
    if not np.isfinite(f):
        raise ValueError("objective is not finite at the start point")
    trace = [f]
    pairs = history if history is not None else deque(maxlen=settings.memory)
    gnorm = float(np.max(np.abs(g))) if g.size else 0.0
    converged = gnorm <= tol
    it = 0
    stalls = 0
    while not converged and it < settings.max_inner_iter:
        it += 1
        accepted = False
        used_qn = False
        for attempt in range(2):
            if attempt == 1 and not used_qn:
                break
            if pairs and attempt == 0:
                used_qn = True
                d = -_two_loop(g, list(pairs))
                if g @ d >= 0:
                    continue
                step = 1.0
            else:
                pairs.clear()
                d = -g
                step = min(1.0, 1.0 / gnorm)
            slope = g @ d
            for _ in range(settings.max_backtrack):
                r_new = r + step * d
                f_new, g_new = free_fun(r_new)
                if np.isfinite(f_new) and f_new <= f + settings.armijo * step * slope:
                    accepted = True
                    break
                step *= settings.backtrack
            if accepted:
                break
        if not accepted:
            break
        s = r_new - r
        y = g_new - g
        sy = s @ y
        if sy > 1e-10 * np.linalg.norm(s) * np.linalg.norm(y):
            pairs.append((s, y, 1.0 / sy))
        stalls = stalls + 1 if f - f_new <= 1e-16 * max(1.0, abs(f)) else 0
        r, f, g = r_new, f_new, g_new
        trace.append(f)
        gnorm = float(np.max(np.abs(g)))
        converged = gnorm <= tol
        if stalls >= 3:
            break
    return SmoothResult(rp.to_natural(r), f, gnorm, it, converged, trace)
