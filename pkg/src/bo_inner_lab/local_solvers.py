"""Informed local search and informed multi-start over the acquisition surface.

The initializer scores a fixed set of Sobol candidates by their standardized
acquisition values and samples the quasi-Newton starting point through a
softmax over those scores, so better (lower) acquisition values are favored
without ever excluding a candidate.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .acquisition import AcquisitionContext, lcb_batch, lcb_value_grad
from .qn import LocalSolveResult, bounded_qn_minimize
from .sobol import sobol_points

N_INIT_CANDIDATES = 20
_SCORE_STD_FLOOR = 1e-12


@lru_cache(maxsize=32)
def _candidate_set(n: int, d: int) -> np.ndarray:
    points = sobol_points(n, d)
    points.setflags(write=False)
    return points


def standardized_scores(values) -> np.ndarray:
    """Scores (mean - v) / std, so lower acquisition values score higher.

    Returns all zeros when the values are (numerically) constant.
    """
    values = np.asarray(values, dtype=float)
    std = float(values.std())
    if std < _SCORE_STD_FLOOR:
        return np.zeros_like(values)
    return (values.mean() - values) / std


def softmax_weights(scores) -> np.ndarray:
    scores = np.asarray(scores, dtype=float)
    shifted = np.exp(scores - scores.max())
    return shifted / shifted.sum()


def informed_initial_point(ctx: AcquisitionContext, rng: np.random.Generator,
                           n_candidates: int = N_INIT_CANDIDATES) -> np.ndarray:
    """Draw a starting point among Sobol candidates, weighted by softmax score."""
    candidates = _candidate_set(n_candidates, ctx.model.dim)
    values = lcb_batch(ctx, candidates)
    scores = standardized_scores(values)
    if np.all(scores == 0.0):
        idx = int(rng.integers(n_candidates))
    else:
        idx = int(rng.choice(n_candidates, p=softmax_weights(scores)))
    return candidates[idx].copy()


def ils_minimize(ctx: AcquisitionContext, rng: np.random.Generator,
                 max_iter: int = 200, tol: float = 1e-8) -> LocalSolveResult:
    """Single informed local search: softmax-initialized quasi-Newton descent."""
    x0 = informed_initial_point(ctx, rng)
    return bounded_qn_minimize(lambda x: lcb_value_grad(ctx, x), x0,
                               max_iter=max_iter, tol=tol)


def ims_minimize(ctx: AcquisitionContext, rng: np.random.Generator,
                 restarts: int = 5, max_iter: int = 200,
                 tol: float = 1e-8) -> LocalSolveResult:
    """Informed multi-start: best of ``restarts`` independent local searches.

    Ties are broken in favor of the earliest restart, and the restarts share
    the caller's random stream sequentially, so ``restarts=1`` reproduces a
    single local search exactly.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    best = None
    for _ in range(restarts):
        result = ils_minimize(ctx, rng, max_iter=max_iter, tol=tol)
        if best is None or result.value < best.value:
            best = result
    return best
