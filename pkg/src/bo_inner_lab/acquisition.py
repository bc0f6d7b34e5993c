"""Lower-confidence-bound acquisition and its exploration-weight schedules.

All inner solvers minimize mean - kappa * std on the scaled surface; a
larger kappa weights the posterior standard deviation more heavily and makes
the search more exploratory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .gp import GpModel, posterior, posterior_batch


@dataclass(frozen=True)
class FixedKappa:
    """Constant exploration weight."""

    value: float

    def __post_init__(self):
        if self.value < 0.0:
            raise ValueError("kappa must be nonnegative")


@dataclass(frozen=True)
class DiscretizedConfidenceSchedule:
    """Slowly growing weight scale * sqrt(2 ln(n_points t^2 pi^2 / (6 delta))).

    ``n_points`` is the (notionally finite) discretization size of the search
    domain and ``delta`` the confidence parameter; the default ``scale``
    damps the bound by 1/sqrt(5).
    """

    n_points: float = 1e6
    delta: float = 0.1
    scale: float = 1.0 / math.sqrt(5.0)

    def __post_init__(self):
        if self.n_points < 1 or not (0.0 < self.delta < 1.0) or self.scale <= 0.0:
            raise ValueError("require n_points >= 1, delta in (0,1), scale > 0")


@dataclass(frozen=True)
class DimensionLogSchedule:
    """More exploitative weight sqrt(0.2 D ln(2t)) for a D-dimensional domain."""

    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")


KappaPolicy = Union[FixedKappa, DiscretizedConfidenceSchedule, DimensionLogSchedule]


def kappa_at(policy: KappaPolicy, t: int) -> float:
    """Exploration weight at outer iteration ``t`` (1-based)."""
    if t < 1:
        raise ValueError("iteration index t must be >= 1")
    if isinstance(policy, FixedKappa):
        return policy.value
    if isinstance(policy, DiscretizedConfidenceSchedule):
        arg = policy.n_points * t * t * math.pi ** 2 / (6.0 * policy.delta)
        return policy.scale * math.sqrt(2.0 * math.log(arg))
    if isinstance(policy, DimensionLogSchedule):
        return math.sqrt(0.2 * policy.dim * math.log(2.0 * t))
    raise TypeError(f"unknown kappa policy: {policy!r}")


@dataclass(frozen=True)
class AcquisitionContext:
    """A trained model plus the kappa policy evaluated at iteration ``t``."""

    model: GpModel
    policy: KappaPolicy
    t: int = 1

    def __post_init__(self):
        if self.t < 1:
            raise ValueError("iteration index t must be >= 1")

    @property
    def kappa(self) -> float:
        return kappa_at(self.policy, self.t)


def lcb_value_grad(ctx: AcquisitionContext, x):
    """Acquisition value mean - kappa*std and its gradient at a scaled point."""
    post = posterior(ctx.model, x)
    kappa = ctx.kappa
    value = post.mean - kappa * post.std
    grad = post.grad_mean - kappa * post.grad_std
    return value, grad


def lcb_batch(ctx: AcquisitionContext, x_batch) -> np.ndarray:
    """Acquisition values at many scaled points (no gradients)."""
    means, stds = posterior_batch(ctx.model, x_batch)
    return means - ctx.kappa * stds
