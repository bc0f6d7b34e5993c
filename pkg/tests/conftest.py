"""Shared fixtures: small trained models and independent dense-GP oracles."""

import numpy as np
import pytest
from scipy.linalg import cho_solve, cholesky

from bo_inner_lab import SearchBox, fit
from bo_inner_lab.gp import GpModel, KernelHyper, ScaledDataset


def make_model(x_scaled, y_scaled, lengthscales, signal_variance,
               jitter=1e-8) -> GpModel:
    """Assemble a GpModel with prescribed hyperparameters (no fitting).

    Inputs are taken as already scaled; the dataset's raw<->scaled maps are
    the identity on [0, 1]^D with untouched outputs.
    """
    x = np.atleast_2d(np.asarray(x_scaled, dtype=float))
    y = np.asarray(y_scaled, dtype=float)
    dim = x.shape[1]
    box = SearchBox(lower=np.zeros(dim), upper=np.ones(dim))
    data = ScaledDataset(x=x, y=y, box=box, y_mean=0.0, y_std=1.0)
    hyper = KernelHyper(lengthscales=np.asarray(lengthscales, dtype=float),
                        signal_variance=signal_variance)
    diff = x[:, None, :] - x[None, :, :]
    r = np.sqrt(np.sum((diff / hyper.lengthscales) ** 2, axis=2))
    k = hyper.signal_variance * (1 + np.sqrt(5) * r + 5 * r**2 / 3) * np.exp(-np.sqrt(5) * r)
    k += jitter * np.eye(len(y))
    chol = cholesky(k, lower=True)
    weights = cho_solve((chol, True), y)
    k_inv = cho_solve((chol, True), np.eye(len(y)))
    return GpModel(hyper=hyper, data=data, chol=chol, weights=weights,
                   k_inv=k_inv, jitter=jitter)


def dense_posterior_oracle(model, x):
    """Posterior mean/std the straightforward way: explicit matrix inverse."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    train = model.data.x
    ell = model.hyper.lengthscales
    sv = model.hyper.signal_variance

    def kern(a, b):
        r = np.sqrt(np.sum(((a - b) / ell) ** 2))
        return sv * (1 + np.sqrt(5) * r + 5 * r**2 / 3) * np.exp(-np.sqrt(5) * r)

    n = train.shape[0]
    k_mat = np.array([[kern(train[i], train[j]) for j in range(n)] for i in range(n)])
    k_mat += model.jitter * np.eye(n)
    k_inv = np.linalg.inv(k_mat)
    k_star = np.array([kern(x, train[i]) for i in range(n)])
    mean = k_star @ k_inv @ model.data.y
    var = max(sv - k_star @ k_inv @ k_star, 0.0)
    return float(mean), float(np.sqrt(var))


@pytest.fixture(scope="session")
def toy_model_1d():
    """Fitted 1-D model on a sine-shaped 3-point dataset."""
    box = SearchBox(lower=[0.0], upper=[1.0])
    x = np.array([[0.0], [0.5], [1.0]])
    y = np.array([0.0, 1.0, 0.1])
    return fit(x, y, box)


@pytest.fixture(scope="session")
def toy_model_2d():
    """Fitted 2-D model on seven spread-out points."""
    box = SearchBox(lower=[0.0, 0.0], upper=[1.0, 1.0])
    rng = np.random.default_rng(11)
    x = rng.uniform(0.05, 0.95, size=(7, 2))
    y = np.sin(5 * x[:, 0]) + np.cos(3 * x[:, 1]) + 0.3 * x[:, 0] * x[:, 1]
    return fit(x, y, box)


@pytest.fixture(scope="session")
def bimodal_model_1d():
    """1-D model whose acquisition surface has two distinct basins."""
    x = np.array([[0.05], [0.25], [0.5], [0.75], [0.95]])
    y = np.array([0.4, -1.0, 1.2, -1.1, 0.5])
    return make_model(x, y, lengthscales=[0.12], signal_variance=1.0)
