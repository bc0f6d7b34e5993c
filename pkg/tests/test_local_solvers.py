"""Sobol construction, the informed initializer, and the local solvers."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bo_inner_lab import (AcquisitionContext, FixedKappa, bounded_qn_minimize,
                          ils_minimize, ims_minimize, informed_initial_point,
                          lcb_batch, lcb_value_grad, sobol_points,
                          softmax_weights, standardized_scores)
from bo_inner_lab.errors import DimensionTooLargeError
from bo_inner_lab import local_solvers


class TestSobol:
    def test_first_three_terms_1d(self):
        assert sobol_points(3, 1).ravel().tolist() == [0.5, 0.75, 0.25]

    def test_all_coordinates_in_unit_interval(self):
        for n, d in ((1, 1), (100, 2), (257, 5), (33, 16)):
            pts = sobol_points(n, d)
            assert pts.shape == (n, d)
            assert np.all(pts >= 0.0) and np.all(pts < 1.0)

    def test_dimension_cap(self):
        with pytest.raises(DimensionTooLargeError):
            sobol_points(4, 17)

    def test_dyadic_balance_of_origin_anchored_net(self):
        # the first 64 terms of the underlying construction (origin included)
        # put exactly one point into each dyadic 8x8 cell
        pts = np.vstack([np.zeros((1, 2)), sobol_points(63, 2)])
        cells = (pts * 8).astype(int)
        counts = np.bincount(cells[:, 0] * 8 + cells[:, 1], minlength=64)
        assert counts.min() == 1 and counts.max() == 1
        # and so does the next aligned block of 64 emitted points
        pts = sobol_points(127, 2)[63:127]
        cells = (pts * 8).astype(int)
        counts = np.bincount(cells[:, 0] * 8 + cells[:, 1], minlength=64)
        assert counts.min() == 1 and counts.max() == 1

    @pytest.mark.parametrize("d", [1, 2, 5, 8, 16])
    def test_matches_independent_library_construction(self, d):
        from scipy.stats import qmc
        mine = sobol_points(127, d)
        theirs = qmc.Sobol(d=d, scramble=False).random_base2(7)[1:128]
        assert np.array_equal(mine, theirs)


class TestInformedInitialPoint:
    def test_softmax_weight_example(self):
        scores = np.array([3.0] + [-0.15] * 19)
        w = softmax_weights(scores)
        expected = np.exp(3) / (np.exp(3) + 19 * np.exp(-0.15))
        assert w[0] == pytest.approx(expected, abs=1e-12)
        assert w[0] == pytest.approx(0.55, abs=5e-3)

    def test_constant_values_score_zero(self):
        assert np.all(standardized_scores(np.full(20, 3.3)) == 0.0)

    def test_scores_favor_lower_acquisition(self):
        values = np.array([1.0, 0.0, 2.0, 1.0])
        scores = standardized_scores(values)
        assert scores[1] == scores.max() and scores[2] == scores.min()
        assert abs(scores.mean()) < 1e-12

    def test_uniform_draw_when_values_constant(self, toy_model_2d, monkeypatch):
        ctx = AcquisitionContext(toy_model_2d, FixedKappa(1.0), 1)
        monkeypatch.setattr(local_solvers, "lcb_batch",
                            lambda _ctx, pts: np.zeros(len(pts)))
        rng = np.random.default_rng(0)
        candidates = local_solvers._candidate_set(20, 2)
        counts = np.zeros(20, int)
        for _ in range(8000):
            x = informed_initial_point(ctx, rng)
            idx = int(np.argmin(np.abs(candidates - x).sum(axis=1)))
            counts[idx] += 1
        freq = counts / counts.sum()
        # each probability 0.05; allow 4 standard errors
        se = np.sqrt(0.05 * 0.95 / 8000)
        assert np.all(np.abs(freq - 0.05) < 4 * se)

    def test_deterministic_given_seed(self, toy_model_2d):
        ctx = AcquisitionContext(toy_model_2d, FixedKappa(2.0), 1)
        a = informed_initial_point(ctx, np.random.default_rng(123))
        b = informed_initial_point(ctx, np.random.default_rng(123))
        assert np.array_equal(a, b)

    def test_sampling_distribution_matches_softmax(self, toy_model_2d, monkeypatch):
        # fixed score vector through a patched acquisition batch
        values = np.linspace(-1.0, 1.0, 20)
        monkeypatch.setattr(local_solvers, "lcb_batch",
                            lambda _ctx, pts: values.copy())
        ctx = AcquisitionContext(toy_model_2d, FixedKappa(1.0), 1)
        weights = softmax_weights(standardized_scores(values))
        candidates = local_solvers._candidate_set(20, 2)
        rng = np.random.default_rng(99)
        n_draws = 100_000
        counts = np.zeros(20, int)
        for _ in range(n_draws):
            x = informed_initial_point(ctx, rng)
            idx = int(np.argmin(np.abs(candidates - x).sum(axis=1)))
            counts[idx] += 1
        freq = counts / n_draws
        se = np.sqrt(weights * (1 - weights) / n_draws)
        assert np.all(np.abs(freq - weights) <= 3 * se + 1e-12)


class TestBoundedQn:
    def test_convex_quadratic(self):
        result = bounded_qn_minimize(
            lambda x: (float((x - 0.3) @ (x - 0.3)), 2 * (x - 0.3)),
            np.full(3, 0.7), max_iter=200, tol=1e-6)
        assert result.converged
        assert np.max(np.abs(result.x - 0.3)) < 1e-6
        assert result.value < 1e-10

    def test_linear_objective_pins_at_vertex(self):
        result = bounded_qn_minimize(
            lambda x: (float(np.sum(x)), np.ones_like(x)),
            np.full(4, 0.5))
        assert np.array_equal(result.x, np.zeros(4))

    def test_returns_points_inside_box_exactly(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            c = rng.uniform(-0.5, 1.5, size=3)
            result = bounded_qn_minimize(
                lambda x, c=c: (float((x - c) @ (x - c)), 2 * (x - c)),
                rng.uniform(size=3))
            assert np.all(result.x >= 0.0) and np.all(result.x <= 1.0)
            expected = np.clip(c, 0.0, 1.0)
            assert np.max(np.abs(result.x - expected)) < 1e-6

    def test_value_never_exceeds_start(self, bimodal_model_1d):
        ctx = AcquisitionContext(bimodal_model_1d, FixedKappa(1.0), 1)
        rng = np.random.default_rng(8)
        for _ in range(10):
            x0 = rng.uniform(size=1)
            f0, _ = lcb_value_grad(ctx, x0)
            res = bounded_qn_minimize(lambda x: lcb_value_grad(ctx, x), x0)
            assert res.value <= f0 + 1e-15

    @settings(max_examples=25, deadline=None)
    @given(st.integers(1, 4), st.integers(0, 10_000))
    def test_random_strictly_convex_quadratics(self, dim, seed):
        rng = np.random.default_rng(seed)
        a = rng.normal(size=(dim, dim))
        h = a @ a.T + np.eye(dim)  # eigenvalues >= 1
        c = rng.uniform(0.1, 0.9, size=dim)
        iters = [0]

        def f(x):
            iters[0] += 1
            d = x - c
            return float(d @ h @ d), 2 * h @ d

        res = bounded_qn_minimize(f, rng.uniform(size=dim), max_iter=50, tol=1e-8)
        assert np.max(np.abs(res.x - c)) < 1e-6

    def test_two_basin_surface_stays_in_start_basin(self, bimodal_model_1d):
        ctx = AcquisitionContext(bimodal_model_1d, FixedKappa(1.0), 1)
        grid = np.linspace(0, 1, 100_001)[:, None]
        vals = lcb_batch(ctx, grid)
        # basin boundary: the interior local max between the two wells
        interior = slice(30_000, 70_000)
        split_idx = 30_000 + int(np.argmax(vals[interior]))
        right = vals[split_idx:]
        right_min = float(right.min())
        x0 = np.array([0.80])
        res = bounded_qn_minimize(lambda x: lcb_value_grad(ctx, x), x0)
        assert res.x[0] > grid[split_idx, 0]
        assert res.value == pytest.approx(right_min, abs=1e-5)


class TestIlsIms:
    def test_ils_matches_grid_oracle_on_unimodal_surface(self):
        from conftest import make_model
        model = make_model([[0.0], [0.5], [1.0]], [1.0, -1.0, 1.0],
                           lengthscales=[0.35], signal_variance=1.0)
        ctx = AcquisitionContext(model, FixedKappa(0.0), 1)
        grid = np.linspace(0, 1, 100_001)[:, None]
        vals = lcb_batch(ctx, grid)
        # confirm the surface really is unimodal before using the oracle
        sign_changes = np.sum(np.diff(np.sign(np.diff(vals))) != 0)
        assert sign_changes == 1
        oracle = float(vals.min())
        for seed in range(5):
            res = ils_minimize(ctx, np.random.default_rng(seed))
            assert res.value <= oracle + 1e-4

    def test_ils_deterministic_given_seed(self, bimodal_model_1d):
        ctx = AcquisitionContext(bimodal_model_1d, FixedKappa(1.0), 1)
        a = ils_minimize(ctx, np.random.default_rng(5))
        b = ils_minimize(ctx, np.random.default_rng(5))
        assert np.array_equal(a.x, b.x) and a.value == b.value

    def test_ils_reaches_both_basins(self, bimodal_model_1d):
        ctx = AcquisitionContext(bimodal_model_1d, FixedKappa(1.0), 1)
        sides = set()
        for seed in range(200):
            res = ils_minimize(ctx, np.random.default_rng(seed))
            sides.add(res.x[0] > 0.5)
        assert sides == {True, False}

    def test_ims_single_restart_equals_ils(self, bimodal_model_1d):
        ctx = AcquisitionContext(bimodal_model_1d, FixedKappa(1.0), 1)
        a = ims_minimize(ctx, np.random.default_rng(17), restarts=1)
        b = ils_minimize(ctx, np.random.default_rng(17))
        assert np.array_equal(a.x, b.x) and a.value == b.value

    def test_ims_is_best_of_restarts(self, bimodal_model_1d):
        ctx = AcquisitionContext(bimodal_model_1d, FixedKappa(1.0), 1)
        best = ims_minimize(ctx, np.random.default_rng(21), restarts=5)
        # replay the same stream: each individual restart is no better
        rng = np.random.default_rng(21)
        singles = [ils_minimize(ctx, rng) for _ in range(5)]
        assert best.value == min(s.value for s in singles)
        assert all(best.value <= s.value for s in singles)

    def test_ims_dominates_ils_under_coupled_seeds(self, bimodal_model_1d):
        ctx = AcquisitionContext(bimodal_model_1d, FixedKappa(1.0), 1)
        for seed in range(30):
            ims = ims_minimize(ctx, np.random.default_rng(seed))
            ils = ils_minimize(ctx, np.random.default_rng(seed))
            assert ims.value <= ils.value + 1e-15

    def test_ims_global_hit_rate_at_least_ils(self, bimodal_model_1d):
        ctx = AcquisitionContext(bimodal_model_1d, FixedKappa(1.0), 1)
        grid = np.linspace(0, 1, 20_001)[:, None]
        vals = lcb_batch(ctx, grid)
        global_min = float(vals.min())
        def hits(solver):
            n = 0
            for seed in range(200):
                res = solver(ctx, np.random.default_rng(seed))
                n += res.value < global_min + 1e-3
            return n
        assert hits(ims_minimize) >= hits(ils_minimize)
