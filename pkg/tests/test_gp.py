"""Surrogate model: kernel values, likelihood, fitting, and posteriors."""

import math

import numpy as np
import pytest

from bo_inner_lab import (SearchBox, fit, kernel_matern52,
                          log_marginal_likelihood, posterior, posterior_batch,
                          predict_raw)
from bo_inner_lab.benchmarks import MUELLER_BROWN_BOX, mueller_brown
from bo_inner_lab.errors import NotPositiveDefiniteError
from bo_inner_lab.gp import JITTER_LADDER, KernelHyper, ScaledDataset

from conftest import dense_posterior_oracle, make_model

MB_POINTS = np.array([[-1.0, 1.5], [0.0, 0.5], [0.5, 0.0]])
MB_VALUES = np.array([mueller_brown(p) for p in MB_POINTS])


class TestKernel:
    def test_zero_distance_gives_signal_variance(self):
        hyper = KernelHyper([1.0], 1.0)
        assert kernel_matern52(0.0, hyper) == 1.0
        hyper = KernelHyper([1.0], 3.7)
        assert kernel_matern52(0.0, hyper) == pytest.approx(3.7, abs=0)

    def test_unit_distance_value(self):
        # high-precision evaluation of the closed form at r = 1
        hyper = KernelHyper([1.0], 1.0)
        assert kernel_matern52(1.0, hyper) == pytest.approx(0.523994108832, abs=1e-9)

    def test_large_distance_decays(self):
        hyper = KernelHyper([1.0], 1.0)
        assert kernel_matern52(100.0, hyper) < 1e-10

    def test_strictly_decreasing(self):
        hyper = KernelHyper([1.0], 2.0)
        r = np.linspace(0, 5, 200)
        k = kernel_matern52(r, hyper)
        assert np.all(np.diff(k) < 0)


class TestLogMarginalLikelihood:
    def test_single_standardized_point(self):
        box = SearchBox([0.0], [1.0])
        data = ScaledDataset.from_raw([[0.5]], [3.0], box)  # standardizes to y=0
        hyper = KernelHyper([0.5], 1.0)
        value = log_marginal_likelihood(hyper, data)
        assert value == pytest.approx(-0.5 * math.log(2 * math.pi), abs=1e-6)

    def test_two_distant_points_diagonal_covariance(self):
        box = SearchBox([0.0], [1.0])
        data = ScaledDataset.from_raw([[0.0], [1.0]], [2.0, 2.0], box)
        # identical outputs standardize to zeros with the fallback std
        assert np.allclose(data.y, 0.0)
        hyper = KernelHyper([0.01], 1.0)  # scaled distance 100 lengthscales
        value = log_marginal_likelihood(hyper, data)
        assert value == pytest.approx(-math.log(2 * math.pi), abs=1e-6)

    def test_matches_dense_linear_algebra_oracle(self):
        data = ScaledDataset.from_raw(MB_POINTS, MB_VALUES, MUELLER_BROWN_BOX)
        hyper = KernelHyper([0.3, 0.4], 1.3)
        # independent oracle: explicit inverse and slogdet, same jitter
        x, y = data.x, data.y
        n = len(y)
        k = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                r = math.sqrt(sum(((x[i, d] - x[j, d]) / hyper.lengthscales[d]) ** 2
                                  for d in range(2)))
                k[i, j] = hyper.signal_variance * (
                    (1 + math.sqrt(5) * r + 5 * r * r / 3) * math.exp(-math.sqrt(5) * r))
        k += JITTER_LADDER[0] * np.eye(n)
        expected = (-0.5 * y @ np.linalg.inv(k) @ y
                    - 0.5 * np.linalg.slogdet(k)[1]
                    - 0.5 * n * math.log(2 * math.pi))
        assert log_marginal_likelihood(hyper, data) == pytest.approx(expected, abs=1e-8)

    def test_duplicate_inputs_survive_via_jitter(self):
        # duplicated rows leave K singular; the jitter ladder restores PD
        box = SearchBox([0.0], [1.0])
        data = ScaledDataset.from_raw([[0.5], [0.5]], [0.0, 1.0], box)
        hyper = KernelHyper([0.5], 1.0)
        assert np.isfinite(log_marginal_likelihood(hyper, data))

    def test_indefinite_matrix_exhausts_ladder(self):
        from bo_inner_lab.gp import _chol_with_jitter
        with pytest.raises(NotPositiveDefiniteError):
            _chol_with_jitter(np.array([[1.0, 2.0], [2.0, 1.0]]))


class TestFit:
    def test_interpolates_training_data(self):
        model = fit(MB_POINTS, MB_VALUES, MUELLER_BROWN_BOX)
        for i in range(3):
            post = posterior(model, model.data.x[i])
            assert abs(post.mean - model.data.y[i]) < 1e-6
            assert post.std < 1e-3
            assert post.std ** 2 <= 1e-6

    def test_warm_start_cannot_worsen_its_init(self):
        model = fit(MB_POINTS, MB_VALUES, MUELLER_BROWN_BOX)
        x_new = np.vstack([MB_POINTS, [[-0.5, 1.0]]])
        y_new = np.append(MB_VALUES, mueller_brown([-0.5, 1.0]))
        refit = fit(x_new, y_new, MUELLER_BROWN_BOX, warm_start=model.hyper)
        data = ScaledDataset.from_raw(x_new, y_new, MUELLER_BROWN_BOX)
        mll_init = log_marginal_likelihood(model.hyper, data)
        mll_new = log_marginal_likelihood(refit.hyper, data)
        assert mll_new >= mll_init - 1e-9

    def test_posterior_matches_dense_oracle(self, toy_model_1d):
        model = toy_model_1d
        mean, std = dense_posterior_oracle(model, model.data.box.scale([0.25]))
        post = posterior(model, model.data.box.scale([0.25]))
        assert post.mean == pytest.approx(mean, abs=1e-8)
        assert post.std == pytest.approx(std, abs=1e-8)

    def test_close_points_survive_via_jitter_ladder(self):
        box = SearchBox([0.0], [1.0])
        x = np.array([[0.2], [0.2 + 2e-6], [0.9]])
        y = np.array([1.0, 1.0, -1.0])
        model = fit(x, y, box)
        assert model.jitter in JITTER_LADDER

    def test_hyperparameters_stay_in_bounds(self, toy_model_2d):
        ls = toy_model_2d.hyper.lengthscales
        assert np.all(ls >= 1e-2) and np.all(ls <= 1e2)
        assert 1e-3 <= toy_model_2d.hyper.signal_variance <= 1e3


class TestPosterior:
    def test_prior_reversion_far_from_data(self):
        x = np.array([[0.05], [0.1]])
        y = np.array([1.0, -1.0])
        model = make_model(x, y, lengthscales=[0.02], signal_variance=2.0)
        post = posterior(model, [0.9])  # 40 lengthscales away
        assert abs(post.mean) < 1e-8
        assert post.std == pytest.approx(math.sqrt(2.0), abs=1e-8)

    def test_gradients_match_finite_differences(self, toy_model_2d):
        model = toy_model_2d
        rng = np.random.default_rng(0)
        h = 1e-5
        for _ in range(100):
            x = rng.uniform(0.02, 0.98, size=2)
            post = posterior(model, x)
            for d in range(2):
                e = np.zeros(2)
                e[d] = h
                mean_fd = (posterior(model, x + e).mean - posterior(model, x - e).mean) / (2 * h)
                std_fd = (posterior(model, x + e).std - posterior(model, x - e).std) / (2 * h)
                assert post.grad_mean[d] == pytest.approx(mean_fd, rel=1e-4, abs=1e-7)
                assert post.grad_std[d] == pytest.approx(std_fd, rel=1e-4, abs=1e-7)

    def test_batch_agrees_with_pointwise(self, toy_model_2d):
        rng = np.random.default_rng(1)
        pts = rng.uniform(size=(50, 2))
        means, stds = posterior_batch(toy_model_2d, pts)
        for i in range(50):
            post = posterior(toy_model_2d, pts[i])
            assert means[i] == pytest.approx(post.mean, abs=1e-10)
            assert stds[i] == pytest.approx(post.std, abs=1e-9)


class TestScaling:
    def test_round_trip(self):
        box = MUELLER_BROWN_BOX
        rng = np.random.default_rng(2)
        pts = rng.uniform(box.lower, box.upper, size=(200, 2))
        back = box.unscale(box.scale(pts))
        assert np.max(np.abs(back - pts)) < 1e-12

    def test_raw_predictions_map_through_output_transform(self):
        model = fit(MB_POINTS, MB_VALUES, MUELLER_BROWN_BOX)
        x_raw = np.array([-0.25, 0.75])
        mean_raw, std_raw = predict_raw(model, x_raw)
        post = posterior(model, MUELLER_BROWN_BOX.scale(x_raw))
        assert mean_raw == pytest.approx(post.mean * model.data.y_std + model.data.y_mean)
        assert std_raw == pytest.approx(post.std * model.data.y_std)

    def test_scaled_inputs_standardized_outputs(self):
        data = ScaledDataset.from_raw(MB_POINTS, MB_VALUES, MUELLER_BROWN_BOX)
        assert np.all(data.x >= 0) and np.all(data.x <= 1)
        assert abs(np.mean(data.y)) < 1e-12
        assert abs(np.std(data.y) - 1) < 1e-12
