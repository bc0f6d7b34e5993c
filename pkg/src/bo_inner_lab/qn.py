"""Box-constrained limited-memory quasi-Newton minimizer on the unit cube.

Limited-memory BFGS directions with gradient projection onto [0, 1]^D and a
strong-Wolfe line search (c1 = 1e-4, c2 = 0.9).  The solver is fully
deterministic: identical inputs produce bit-identical iterates, which the
branch-and-bound incumbent polish relies on.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Callable

import numpy as np

WOLFE_C1 = 1e-4
WOLFE_C2 = 0.9
DEFAULT_MEMORY = 10
_ACTIVE_TOL = 1e-12
_CURVATURE_TOL = 1e-10


@dataclass(frozen=True)
class LocalSolveResult:
    """Outcome of one box-constrained local minimization.

    ``x`` lies in [0, 1]^D exactly and ``value`` equals the objective at
    ``x``; ``converged`` is False when the iteration cap was hit or the line
    search failed, in which case ``x`` is the best accepted iterate.
    """

    x: np.ndarray
    value: float
    n_evals: int
    converged: bool


def _project(x: np.ndarray) -> np.ndarray:
    return np.clip(x, 0.0, 1.0)


def _two_loop(g, pairs):
    """L-BFGS two-loop recursion for the (implicit) inverse-Hessian product."""
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * float(s @ q)
        alphas.append(a)
        q -= a * y
    if pairs:
        s, y, _ = pairs[-1]
        q *= float(s @ y) / float(y @ y)
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * float(y @ q)
        q += (a - b) * s
    return q


def _wolfe_line_search(f_and_grad, x, f0, g0, d, alpha_init, alpha_max,
                       max_evals=12):
    """Strong-Wolfe search along ``d`` capped at the first bound crossing.

    Returns (alpha, f, g, x_new, n_evals) or None when no point satisfying
    even the sufficient-decrease condition was found.
    """
    deriv0 = float(g0 @ d)
    evals = 0

    def phi(alpha):
        nonlocal evals
        x_new = _project(x + alpha * d)
        f, g = f_and_grad(x_new)
        evals += 1
        return f, g, x_new

    best = None  # best Armijo-satisfying point seen
    alpha_prev, f_prev, deriv_prev = 0.0, f0, deriv0
    alpha = min(alpha_init, alpha_max)
    lo = hi = None
    for _ in range(max_evals):
        f, g, x_new = phi(alpha)
        deriv = float(g @ d)
        armijo = f <= f0 + WOLFE_C1 * alpha * deriv0
        if armijo and (best is None or f < best[1]):
            best = (alpha, f, g, x_new)
        if not armijo or (f >= f_prev and alpha_prev > 0.0):
            lo = (alpha_prev, f_prev, deriv_prev)
            hi = (alpha, f, deriv)
            break
        if abs(deriv) <= -WOLFE_C2 * deriv0:
            return alpha, f, g, x_new, evals
        if deriv >= 0.0:
            lo = (alpha, f, deriv)
            hi = (alpha_prev, f_prev, deriv_prev)
            break
        if alpha >= alpha_max:
            # bound reached with sufficient decrease
            return alpha, f, g, x_new, evals
        alpha_prev, f_prev, deriv_prev = alpha, f, deriv
        alpha = min(2.0 * alpha, alpha_max)
    if lo is None:
        if best is not None:
            a, f, g = best[0], best[1], best[2]
            return a, f, g, best[3], evals
        return None
    # zoom by bisection between lo and hi
    for _ in range(max_evals):
        alpha = 0.5 * (lo[0] + hi[0])
        f, g, x_new = phi(alpha)
        deriv = float(g @ d)
        armijo = f <= f0 + WOLFE_C1 * alpha * deriv0
        if armijo and (best is None or f < best[1]):
            best = (alpha, f, g, x_new)
        if not armijo or f >= lo[1]:
            hi = (alpha, f, deriv)
        else:
            if abs(deriv) <= -WOLFE_C2 * deriv0:
                return alpha, f, g, x_new, evals
            if deriv * (hi[0] - lo[0]) >= 0.0:
                hi = lo
            lo = (alpha, f, deriv)
        if abs(hi[0] - lo[0]) < 1e-14:
            break
    if best is not None:
        a, f, g = best[0], best[1], best[2]
        return a, f, g, best[3], evals
    return None


def bounded_qn_minimize(f_and_grad: Callable, x0, max_iter: int = 200,
                        tol: float = 1e-8, memory: int = DEFAULT_MEMORY,
                        ftol: float = 0.0) -> LocalSolveResult:
    """Minimize a differentiable objective over the unit box [0, 1]^D.

    ``f_and_grad(x)`` must return ``(value, gradient)``.  Accepted steps are
    monotone nonincreasing in the objective and the returned point never
    leaves the box.  Convergence means the infinity norm of the projected
    gradient dropped below ``tol``; a positive ``ftol`` additionally stops
    (without claiming convergence) after three consecutive steps whose
    relative objective decrease stays below it, which guards against
    grinding on numerically flat ridges.
    """
    x = _project(np.asarray(x0, dtype=float).copy())
    f, g = f_and_grad(x)
    evals = 1
    if not np.isfinite(f):
        return LocalSolveResult(x=x, value=float(f), n_evals=evals, converged=False)
    pairs: deque = deque(maxlen=memory)
    converged = False
    stalls = 0

    for _ in range(max_iter):
        proj_grad = x - _project(x - g)
        if float(np.max(np.abs(proj_grad))) <= tol:
            converged = True
            break

        d = -_two_loop(g, pairs)
        at_lower = (x <= _ACTIVE_TOL) & (d < 0.0)
        at_upper = (x >= 1.0 - _ACTIVE_TOL) & (d > 0.0)
        d[at_lower | at_upper] = 0.0
        descent = float(g @ d)
        if descent >= -1e-15 * math.sqrt(float(g @ g) * float(d @ d)) or not np.all(np.isfinite(d)):
            # quasi-Newton direction unusable; restart from projected steepest descent
            pairs.clear()
            d = _project(x - g) - x
            descent = float(g @ d)
            if descent >= 0.0:
                converged = True
                break

        # largest step that stays inside the box along the moving coordinates
        with np.errstate(divide="ignore", invalid="ignore"):
            dist = np.where(d > 0, (1.0 - x) / d, np.where(d < 0, -x / d, np.inf))
        alpha_max = float(np.min(dist))
        if not np.isfinite(alpha_max):
            alpha_max = 1e12
        if alpha_max <= 0.0:
            converged = True
            break

        ls = _wolfe_line_search(f_and_grad, x, f, g, d, min(1.0, alpha_max), alpha_max)
        if ls is None:
            break
        alpha, f_new, g_new, x_new, ls_evals = ls
        evals += ls_evals
        if not (np.isfinite(f_new) and np.all(np.isfinite(g_new))):
            break
        s = x_new - x
        yk = g_new - g
        sy = float(s @ yk)
        if sy > _CURVATURE_TOL * math.sqrt(float(s @ s) * float(yk @ yk)):
            pairs.append((s, yk, 1.0 / sy))
        if ftol > 0.0:
            stalls = stalls + 1 if f - f_new <= ftol * (1.0 + abs(f)) else 0
        x, f, g = x_new, f_new, g_new
        if ftol > 0.0 and stalls >= 3:
            break

    return LocalSolveResult(x=x, value=float(f), n_evals=evals, converged=converged)
