"""Acquisition values, gradients, and the exploration-weight schedules."""

import numpy as np
import pytest

from bo_inner_lab import (AcquisitionContext, DimensionLogSchedule,
                          DiscretizedConfidenceSchedule, FixedKappa, fit,
                          kappa_at, lcb_batch, lcb_value_grad, posterior)
from bo_inner_lab.box import SearchBox


class TestKappaSchedules:
    def test_confidence_schedule_anchors(self):
        policy = DiscretizedConfidenceSchedule()
        assert round(kappa_at(policy, 1), 2) == 2.58
        assert round(kappa_at(policy, 30), 2) == 3.06

    def test_dimension_schedule_value(self):
        assert kappa_at(DimensionLogSchedule(dim=2), 1) == pytest.approx(0.5266, abs=1e-3)

    def test_fixed_policy(self):
        assert kappa_at(FixedKappa(2.0), 1) == 2.0
        assert kappa_at(FixedKappa(2.0), 1000) == 2.0

    @pytest.mark.parametrize("policy", [DiscretizedConfidenceSchedule(),
                                        DimensionLogSchedule(dim=3)])
    def test_schedules_nondecreasing(self, policy):
        values = [kappa_at(policy, t) for t in range(1, 60)]
        assert all(b >= a for a, b in zip(values, values[1:]))

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            FixedKappa(-1.0)
        with pytest.raises(ValueError):
            DiscretizedConfidenceSchedule(delta=1.5)
        with pytest.raises(ValueError):
            DimensionLogSchedule(dim=0)
        with pytest.raises(ValueError):
            kappa_at(FixedKappa(1.0), 0)


class TestLcb:
    def test_value_is_mean_minus_kappa_std(self, toy_model_2d):
        x = np.array([0.4, 0.7])
        post = posterior(toy_model_2d, x)
        for kappa in (0.0, 0.5, 2.0):
            ctx = AcquisitionContext(toy_model_2d, FixedKappa(kappa), 1)
            value, _ = lcb_value_grad(ctx, x)
            assert value == post.mean - kappa * post.std
        # mu=2, sigma=1, kappa=2 -> 0 is the same arithmetic identity
        assert 2.0 - 2.0 * 1.0 == 0.0

    def test_kappa_zero_is_pure_posterior_mean(self, toy_model_2d):
        ctx = AcquisitionContext(toy_model_2d, FixedKappa(0.0), 1)
        rng = np.random.default_rng(3)
        for _ in range(10):
            x = rng.uniform(size=2)
            value, _ = lcb_value_grad(ctx, x)
            assert value == posterior(toy_model_2d, x).mean

    def test_gradient_matches_finite_differences(self, toy_model_1d):
        ctx = AcquisitionContext(toy_model_1d, FixedKappa(1.5), 1)
        rng = np.random.default_rng(4)
        h = 1e-5
        for _ in range(20):
            x = rng.uniform(0.05, 0.95, size=1)
            _, grad = lcb_value_grad(ctx, x)
            fd = (lcb_value_grad(ctx, x + h)[0] - lcb_value_grad(ctx, x - h)[0]) / (2 * h)
            assert grad[0] == pytest.approx(fd, rel=1e-4, abs=1e-7)

    def test_nonincreasing_in_kappa(self, toy_model_2d):
        rng = np.random.default_rng(5)
        for _ in range(20):
            x = rng.uniform(size=2)
            values = [lcb_value_grad(
                AcquisitionContext(toy_model_2d, FixedKappa(k), 1), x)[0]
                for k in (0.0, 0.5, 1.0, 2.0, 4.0)]
            assert all(b <= a + 1e-15 for a, b in zip(values, values[1:]))

    def test_training_point_band(self, toy_model_2d):
        kappa = 2.0
        ctx = AcquisitionContext(toy_model_2d, FixedKappa(kappa), 1)
        for i in range(toy_model_2d.data.n):
            xi = toy_model_2d.data.x[i]
            yi = toy_model_2d.data.y[i]
            value, _ = lcb_value_grad(ctx, xi)
            assert yi - kappa * 1e-3 <= value <= yi + 1e-9

    def test_batch_matches_pointwise(self, toy_model_2d):
        ctx = AcquisitionContext(toy_model_2d, FixedKappa(1.0), 3)
        pts = np.random.default_rng(6).uniform(size=(30, 2))
        batch = lcb_batch(ctx, pts)
        single = [lcb_value_grad(ctx, p)[0] for p in pts]
        assert np.allclose(batch, single, atol=1e-9)


class TestArgminInvariance:
    def test_output_rescaling_leaves_scaled_surface_unchanged(self):
        box = SearchBox([0.0], [1.0])
        x = np.array([[0.1], [0.45], [0.8]])
        y = np.array([3.0, -1.0, 2.0])
        model_a = fit(x, y, box)
        model_b = fit(x, 5.0 * y, box)
        grid = np.linspace(0, 1, 301)[:, None]
        ctx_a = AcquisitionContext(model_a, FixedKappa(2.0), 1)
        ctx_b = AcquisitionContext(model_b, FixedKappa(2.0), 1)
        vals_a = lcb_batch(ctx_a, grid)
        vals_b = lcb_batch(ctx_b, grid)
        assert np.max(np.abs(vals_a - vals_b)) < 1e-9
        assert np.argmin(vals_a) == np.argmin(vals_b)
