"""Exact noiseless Gaussian-process regression with a Matern-5/2 kernel.

Inputs are mapped affinely onto [0, 1]^D, outputs are standardized to zero
mean and unit variance, and hyperparameters are refit each iteration by a
warm-started bounded quasi-Newton ascent of the marginal log-likelihood in
log-parameter space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky

from .box import SearchBox
from .errors import NotPositiveDefiniteError
from .qn import bounded_qn_minimize

SQRT5 = math.sqrt(5.0)

LENGTHSCALE_BOUNDS = (1e-2, 1e2)
SIGNAL_VARIANCE_BOUNDS = (1e-3, 1e3)
JITTER_LADDER = (1e-8, 1e-6, 1e-4)

_DEFAULT_LENGTHSCALE = 0.5
_DEFAULT_SIGNAL_VARIANCE = 1.0
_STD_FLOOR = 1e-12


@dataclass(frozen=True)
class KernelHyper:
    """Kernel hyperparameters in scaled-input / scaled-output units."""

    lengthscales: np.ndarray
    signal_variance: float

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        object.__setattr__(self, "lengthscales", ls)
        object.__setattr__(self, "signal_variance", float(self.signal_variance))
        if np.any(ls <= 0.0) or self.signal_variance <= 0.0:
            raise ValueError("hyperparameters must be strictly positive")


@dataclass(frozen=True)
class ScaledDataset:
    """Training data mapped to the unit cube with standardized outputs."""

    x: np.ndarray          # (n, D), every coordinate in [0, 1]
    y: np.ndarray          # (n,), zero mean / unit variance (fallback std 1)
    box: SearchBox
    y_mean: float
    y_std: float

    @classmethod
    def from_raw(cls, x_raw, y_raw, box: SearchBox) -> "ScaledDataset":
        x_raw = np.atleast_2d(np.asarray(x_raw, dtype=float))
        y_raw = np.atleast_1d(np.asarray(y_raw, dtype=float))
        if x_raw.shape[0] != y_raw.shape[0]:
            raise ValueError("x and y must have the same number of rows")
        if not box.contains(x_raw.min(axis=0)) or not box.contains(x_raw.max(axis=0)):
            raise ValueError("all training inputs must lie inside the search box")
        y_mean = float(np.mean(y_raw))
        y_std = float(np.std(y_raw))
        if y_std < _STD_FLOOR:
            y_std = 1.0
        x = np.clip(box.scale(x_raw), 0.0, 1.0)
        y = (y_raw - y_mean) / y_std
        return cls(x=x, y=y, box=box, y_mean=y_mean, y_std=y_std)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def unscale_y(self, y_scaled):
        return np.asarray(y_scaled) * self.y_std + self.y_mean


@dataclass(frozen=True)
class Posterior:
    """Pointwise posterior in scaled units with analytic input gradients."""

    mean: float
    std: float
    grad_mean: np.ndarray
    grad_std: np.ndarray


@dataclass(frozen=True)
class GpModel:
    """Immutable trained GP: hyperparameters, data, and cached factorizations."""

    hyper: KernelHyper
    data: ScaledDataset
    chol: np.ndarray       # lower Cholesky factor of K + jitter I
    weights: np.ndarray    # solves (K + jitter I) w = y
    k_inv: np.ndarray      # inverse of K + jitter I
    jitter: float

    @property
    def dim(self) -> int:
        return self.data.dim


def matern52_profile(r):
    """Unit-variance Matern-5/2 correlation as a function of scaled distance."""
    r = np.asarray(r, dtype=float)
    return (1.0 + SQRT5 * r + (5.0 / 3.0) * r * r) * np.exp(-SQRT5 * r)


def kernel_matern52(r, hyper: KernelHyper):
    """Kernel value at lengthscale-weighted distance ``r`` (scalar or array)."""
    return hyper.signal_variance * matern52_profile(r)


def _scaled_sq_dists(x1, x2, lengthscales):
    """Per-dimension squared distances divided by squared lengthscales."""
    diff = x1[:, None, :] - x2[None, :, :]
    return (diff / lengthscales) ** 2


def _kernel_matrix(data: ScaledDataset, hyper: KernelHyper):
    sq = _scaled_sq_dists(data.x, data.x, hyper.lengthscales)
    r = np.sqrt(np.sum(sq, axis=2))
    return hyper.signal_variance * matern52_profile(r), r, sq


def _chol_with_jitter(k_matrix):
    """Cholesky with the escalating jitter ladder; returns (L, jitter)."""
    n = k_matrix.shape[0]
    for jitter in JITTER_LADDER:
        try:
            L = cholesky(k_matrix + jitter * np.eye(n), lower=True)
            return L, jitter
        except np.linalg.LinAlgError:
            continue
        except ValueError:
            continue
    raise NotPositiveDefiniteError(
        "covariance stayed indefinite after jitter ladder "
        f"{JITTER_LADDER}; inputs are likely duplicated")


def log_marginal_likelihood(hyper: KernelHyper, data: ScaledDataset) -> float:
    """Marginal log-likelihood of the standardized outputs under ``hyper``."""
    k_matrix, _, _ = _kernel_matrix(data, hyper)
    L, _ = _chol_with_jitter(k_matrix)
    alpha = cho_solve((L, True), data.y)
    n = data.n
    return float(-0.5 * data.y @ alpha - np.sum(np.log(np.diag(L)))
                 - 0.5 * n * math.log(2.0 * math.pi))


def _mll_and_grad(hyper: KernelHyper, data: ScaledDataset):
    """MLL and its gradient with respect to (log lengthscales, log signal var)."""
    k_matrix, r, sq = _kernel_matrix(data, hyper)
    L, _ = _chol_with_jitter(k_matrix)
    alpha = cho_solve((L, True), data.y)
    k_inv = cho_solve((L, True), np.eye(data.n))
    mll = float(-0.5 * data.y @ alpha - np.sum(np.log(np.diag(L)))
                - 0.5 * data.n * math.log(2.0 * math.pi))
    outer = np.outer(alpha, alpha) - k_inv
    # d k / d log(ell_d) = sv * (5/3) (1 + sqrt5 r) exp(-sqrt5 r) * sq_d
    base = hyper.signal_variance * (5.0 / 3.0) * (1.0 + SQRT5 * r) * np.exp(-SQRT5 * r)
    grad = np.empty(data.dim + 1)
    for d in range(data.dim):
        grad[d] = 0.5 * float(np.sum(outer * (base * sq[:, :, d])))
    grad[-1] = 0.5 * float(np.sum(outer * k_matrix))
    return mll, grad


def fit(x_raw, y_raw, box: SearchBox, warm_start: KernelHyper | None = None,
        max_iter: int = 60, tol: float = 1e-5) -> GpModel:
    """Fit the GP by bounded quasi-Newton ascent of the MLL in log space.

    ``warm_start`` carries the previous iteration's hyperparameters; without
    it the search starts from lengthscales 0.5 and unit signal variance.
    """
    data = ScaledDataset.from_raw(x_raw, y_raw, box)
    dim = data.dim
    log_lo = np.append(np.full(dim, math.log(LENGTHSCALE_BOUNDS[0])),
                       math.log(SIGNAL_VARIANCE_BOUNDS[0]))
    log_hi = np.append(np.full(dim, math.log(LENGTHSCALE_BOUNDS[1])),
                       math.log(SIGNAL_VARIANCE_BOUNDS[1]))
    span = log_hi - log_lo

    if warm_start is not None:
        theta0 = np.append(warm_start.lengthscales, warm_start.signal_variance)
    else:
        theta0 = np.append(np.full(dim, _DEFAULT_LENGTHSCALE), _DEFAULT_SIGNAL_VARIANCE)
    z0 = np.clip((np.log(theta0) - log_lo) / span, 0.0, 1.0)

    def objective(z):
        theta = np.exp(log_lo + z * span)
        hyper = KernelHyper(lengthscales=theta[:dim], signal_variance=theta[-1])
        mll, grad_log = _mll_and_grad(hyper, data)
        return -mll, -grad_log * span

    result = bounded_qn_minimize(objective, z0, max_iter=max_iter, tol=tol,
                                 ftol=1e-10)
    theta = np.exp(log_lo + result.x * span)
    hyper = KernelHyper(lengthscales=theta[:dim], signal_variance=theta[-1])

    k_matrix, _, _ = _kernel_matrix(data, hyper)
    L, jitter = _chol_with_jitter(k_matrix)
    weights = cho_solve((L, True), data.y)
    k_inv = cho_solve((L, True), np.eye(data.n))
    return GpModel(hyper=hyper, data=data, chol=L, weights=weights,
                   k_inv=k_inv, jitter=jitter)


def _cross_kernel(model: GpModel, x_query):
    """Kernel vector/matrix between query points and the training inputs."""
    sq = _scaled_sq_dists(x_query, model.data.x, model.hyper.lengthscales)
    r = np.sqrt(np.sum(sq, axis=2))
    return model.hyper.signal_variance * matern52_profile(r), r


def posterior(model: GpModel, x) -> Posterior:
    """Posterior mean/std and their gradients at one scaled input point."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    k_star, r = _cross_kernel(model, x[None, :])
    k_star = k_star[0]
    r = r[0]
    mean = float(k_star @ model.weights)

    a = model.k_inv @ k_star
    var = float(model.hyper.signal_variance - k_star @ a)
    var = max(var, 0.0)
    std = math.sqrt(var)

    # d k / d x = -sv (5/3)(1 + sqrt5 r) exp(-sqrt5 r) (x - x_i) / ell^2
    scale = -model.hyper.signal_variance * (5.0 / 3.0) * (1.0 + SQRT5 * r) * np.exp(-SQRT5 * r)
    dk = scale[:, None] * (x[None, :] - model.data.x) / model.hyper.lengthscales ** 2
    grad_mean = dk.T @ model.weights
    grad_var = -2.0 * (dk.T @ a)
    grad_std = grad_var / (2.0 * max(std, _STD_FLOOR))
    return Posterior(mean=mean, std=std, grad_mean=grad_mean, grad_std=grad_std)


def posterior_batch(model: GpModel, x_batch):
    """Vectorized posterior means and stds (no gradients) for many points."""
    x_batch = np.atleast_2d(np.asarray(x_batch, dtype=float))
    k_star, _ = _cross_kernel(model, x_batch)
    means = k_star @ model.weights
    var = np.maximum(model.hyper.signal_variance
                     - np.sum((k_star @ model.k_inv) * k_star, axis=1), 0.0)
    return means, np.sqrt(var)


def predict_raw(model: GpModel, x_raw):
    """Posterior mean/std at a raw-unit input, mapped back to raw output units."""
    x = model.data.box.scale(np.asarray(x_raw, dtype=float))
    post = posterior(model, x)
    return (post.mean * model.data.y_std + model.data.y_mean,
            post.std * model.data.y_std)
