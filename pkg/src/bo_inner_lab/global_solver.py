"""Deterministic spatial branch-and-bound minimizer for the acquisition surface.

Lower bounds come from natural interval extensions of the GP posterior over
sub-boxes of the scaled domain; incumbents come from deterministic
quasi-Newton polishes started at node midpoints.  The solver involves no
randomness, so identical inputs give bit-identical results as long as the
deterministic node cap (rather than the wall-clock safety limit) is binding.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass

import numpy as np

from .acquisition import AcquisitionContext, lcb_value_grad
from .gp import GpModel, KernelHyper, kernel_matern52, matern52_profile
from .qn import bounded_qn_minimize

# relative/absolute outward widening applied to every computed enclosure,
# protecting soundness against floating-point rounding
_SLOP = 1e-12

_MIN_BOX_WIDTH = 1e-9
_POLISH_MAX_ITER = 20
_POLISH_TOL = 1e-8
_POLISH_FTOL = 1e-11

STATUS_OPTIMAL = "optimal"
STATUS_TIME_LIMIT = "time-limit"


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi]; enclosures are widened outward, never inward."""

    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"invalid interval [{self.lo}, {self.hi}]")

    def contains(self, value: float, atol: float = 0.0) -> bool:
        return self.lo - atol <= value <= self.hi + atol

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass
class BnbNode:
    lower: np.ndarray
    upper: np.ndarray
    lb: float
    depth: int


@dataclass(frozen=True)
class BnbResult:
    """Incumbent, certified bound, and bookkeeping for one global solve."""

    x_best: np.ndarray
    ub: float
    lb: float
    gap_rel: float
    status: str
    nodes_processed: int


@dataclass(frozen=True)
class LoosenState:
    """Current relative-gap tolerance; starts at 0.01 for every BO run."""

    eps_r: float = 0.01


def _widen(lo: float, hi: float) -> tuple[float, float]:
    pad = _SLOP * (1.0 + max(abs(lo), abs(hi)))
    return lo - pad, hi + pad


def _kernel_bounds(model: GpModel, box_lower, box_upper):
    """Vectorized kernel enclosures between a box and all training points."""
    x = model.data.x
    ell = model.hyper.lengthscales
    near = np.maximum(0.0, np.maximum(box_lower[None, :] - x, x - box_upper[None, :])) / ell
    far = np.maximum(box_upper[None, :] - x, x - box_lower[None, :]) / ell
    r_lo = np.sqrt(np.sum(near * near, axis=1))
    r_hi = np.sqrt(np.sum(far * far, axis=1))
    sv = model.hyper.signal_variance
    k_lo = sv * matern52_profile(r_hi)
    k_hi = sv * matern52_profile(r_lo)
    pad = _SLOP * (1.0 + sv)
    return np.maximum(k_lo - pad, 0.0), k_hi + pad


def interval_kernel_over_box(box_lower, box_upper, training_point,
                             hyper: KernelHyper) -> Interval:
    """Enclosure of k(x, x_i) for x ranging over the given scaled box."""
    xi = np.asarray(training_point, dtype=float)
    lo = np.asarray(box_lower, dtype=float)
    hi = np.asarray(box_upper, dtype=float)
    near = np.maximum(0.0, np.maximum(lo - xi, xi - hi)) / hyper.lengthscales
    far = np.maximum(hi - xi, xi - lo) / hyper.lengthscales
    r_lo = float(np.sqrt(np.sum(near * near)))
    r_hi = float(np.sqrt(np.sum(far * far)))
    k_lo = float(kernel_matern52(r_hi, hyper))
    k_hi = float(kernel_matern52(r_lo, hyper))
    pad = _SLOP * (1.0 + hyper.signal_variance)
    return Interval(max(k_lo - pad, 0.0), k_hi + pad)


def interval_posterior(model: GpModel, box_lower, box_upper):
    """Sound enclosures of the posterior mean and std over a scaled box."""
    lo = np.asarray(box_lower, dtype=float)
    hi = np.asarray(box_upper, dtype=float)
    k_lo, k_hi = _kernel_bounds(model, lo, hi)

    w = model.weights
    mean_lo = float(np.sum(np.where(w >= 0.0, w * k_lo, w * k_hi)))
    mean_hi = float(np.sum(np.where(w >= 0.0, w * k_hi, w * k_lo)))
    mean_lo, mean_hi = _widen(mean_lo, mean_hi)

    # quadratic form q = k*^T K^-1 k* bounded elementwise (kernel values >= 0)
    a = model.k_inv
    p_lo = np.outer(k_lo, k_lo)
    p_hi = np.outer(k_hi, k_hi)
    q_lo = float(np.sum(np.where(a >= 0.0, a * p_lo, a * p_hi)))
    q_hi = float(np.sum(np.where(a >= 0.0, a * p_hi, a * p_lo)))

    sv = model.hyper.signal_variance
    # conditioning on a single training point can only increase the variance,
    # so sv - k(x, x_i)^2 / (sv + jitter) upper-bounds the full posterior
    # variance; take the best point as a second enclosure and intersect
    k_lo_max = float(np.max(k_lo)) if k_lo.size else 0.0
    var_single = sv - k_lo_max * k_lo_max / (sv + model.jitter)
    var_lo = min(max(sv - q_hi, 0.0), sv)
    var_hi = min(max(sv - q_lo, 0.0), sv, max(var_single, var_lo))
    std_lo = math.sqrt(var_lo)
    std_hi = math.sqrt(var_hi)
    std_lo, std_hi = _widen(std_lo, std_hi)
    return Interval(mean_lo, mean_hi), Interval(max(std_lo, 0.0), std_hi)


def lcb_lower_bound(model: GpModel, box_lower, box_upper, kappa: float) -> float:
    """Lower bound on mean - kappa*std over the box (kappa >= 0)."""
    mean, std = interval_posterior(model, box_lower, box_upper)
    return mean.lo - kappa * std.hi


def bnb_minimize(ctx: AcquisitionContext, eps_r: float, eps_a: float = 1e-6,
                 time_limit: float = 10.0, node_cap: int = 200_000) -> BnbResult:
    """Best-first branch-and-bound minimization of the acquisition over [0,1]^D.

    Nodes are fathomed once their lower bound cannot improve the incumbent by
    more than ``max(eps_a, eps_r * |incumbent|)``; branching bisects the
    widest dimension.  Exhausting ``node_cap`` or ``time_limit`` returns the
    incumbent with status "time-limit".
    """
    if eps_r <= 0.0:
        raise ValueError("eps_r must be positive")
    model = ctx.model
    kappa = ctx.kappa
    dim = model.dim

    def f_and_grad(x):
        return lcb_value_grad(ctx, x)

    def gap_tol(ub_val: float) -> float:
        return max(eps_a, eps_r * abs(ub_val))

    start = time.perf_counter()
    root_lower = np.zeros(dim)
    root_upper = np.ones(dim)
    root = BnbNode(root_lower, root_upper, lcb_lower_bound(model, root_lower, root_upper, kappa), 0)

    heap: list[tuple[float, int, BnbNode]] = []
    tie = 0
    heapq.heappush(heap, (root.lb, tie, root))

    ub = math.inf
    x_best = 0.5 * np.ones(dim)
    min_resolved_lb = math.inf  # min lb over fathomed nodes and unsplittable leaves
    nodes_processed = 0
    status = STATUS_OPTIMAL

    while True:
        if heap:
            lb_report = min(heap[0][0], min_resolved_lb)
        else:
            lb_report = min(min_resolved_lb, ub)
            break
        if math.isfinite(ub) and ub - lb_report <= gap_tol(ub):
            break
        if nodes_processed >= node_cap or time.perf_counter() - start > time_limit:
            status = STATUS_TIME_LIMIT
            break

        _, _, node = heapq.heappop(heap)
        nodes_processed += 1
        if node.lb >= ub - gap_tol(ub):
            min_resolved_lb = min(min_resolved_lb, node.lb)
            continue

        mid = 0.5 * (node.lower + node.upper)
        polish = bounded_qn_minimize(f_and_grad, mid, max_iter=_POLISH_MAX_ITER,
                                     tol=_POLISH_TOL, ftol=_POLISH_FTOL)
        if np.isfinite(polish.value) and polish.value < ub:
            ub = polish.value
            x_best = polish.x

        widths = node.upper - node.lower
        j = int(np.argmax(widths))
        if widths[j] < _MIN_BOX_WIDTH:
            min_resolved_lb = min(min_resolved_lb, node.lb)
            continue
        split = 0.5 * (node.lower[j] + node.upper[j])
        for child_lower_j, child_upper_j in ((node.lower[j], split), (split, node.upper[j])):
            c_lower = node.lower.copy()
            c_upper = node.upper.copy()
            c_lower[j] = child_lower_j
            c_upper[j] = child_upper_j
            # child bound can only tighten relative to the parent's
            c_lb = max(lcb_lower_bound(model, c_lower, c_upper, kappa), node.lb)
            if c_lb >= ub - gap_tol(ub):
                min_resolved_lb = min(min_resolved_lb, c_lb)
                continue
            tie += 1
            heapq.heappush(heap, (c_lb, tie, BnbNode(c_lower, c_upper, c_lb, node.depth + 1)))

    lb_report = min(lb_report, ub)
    gap_rel = (ub - lb_report) / max(abs(ub), 1e-12)
    return BnbResult(x_best=x_best, ub=float(ub), lb=float(lb_report),
                     gap_rel=float(gap_rel), status=status,
                     nodes_processed=nodes_processed)


def loosen_policy_update(state: LoosenState, result: BnbResult) -> LoosenState:
    """Loosen the relative tolerance tenfold after a badly unconverged iterate.

    Triggered when a time-limited solve left a relative gap at least ten
    times the current tolerance; optimal solves leave the state unchanged.
    """
    if result.status == STATUS_TIME_LIMIT and result.gap_rel >= 10.0 * state.eps_r:
        return LoosenState(eps_r=10.0 * state.eps_r)
    return state
