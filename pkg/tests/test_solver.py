# Tests for Solver
"""
test_solver - Unit tests for penalized fits, paths and lambda selection.
"""

import pytest
import numpy as np
import sys
import os
from sklearn.model_selection import KFold

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from tests.conftest import make_squared_problem
import soslasso.solver as solver_module
from soslasso.errors import DimensionMismatch, InvalidLambdaGrid, TooFewSamples, UncoveredSupport
from soslasso.groups import build_group_set, replicate_across_tasks, singleton_groups
from soslasso.losses import MultitaskProblem
from soslasso.metrics import misclassification_rate
from soslasso.penalty import PenaltyConfig, PenaltyMode
from soslasso.solver import (
    SolverConfig,
    StepRule,
    clairvoyant_select,
    cross_validate,
    default_lambda_grid,
    fit,
    lambda_max,
    objective,
    reg_path,
)


TIGHT = SolverConfig(max_iters=20000, rel_obj_tol=1e-12, stationarity_tol=1e-9)


def lasso_coordinate_descent(design, y, penalty, sweeps=5000):
    """min (1/2n)||y - design x||^2 + penalty ||x||_1 by cyclic coordinate descent."""
    n, p = design.shape
    x = np.zeros(p)
    col_sq = (design * design).sum(axis=0) / n
    r = y.copy()
    for _ in range(sweeps):
        for j in range(p):
            r += design[:, j] * x[j]
            rho = design[:, j] @ r / n
            x[j] = np.sign(rho) * max(abs(rho) - penalty, 0.0) / col_sq[j]
            r -= design[:, j] * x[j]
    return x


def latent_group_lasso_ista(design, y, groups, penalty, max_sweeps=200000, tol=1e-14):
    """min (1/2n)||y - design x||^2 + penalty sum_G ||w_G|| over x = sum_G w_G, by plain ISTA."""
    n, p = design.shape
    cols = np.concatenate([np.asarray(list(g)) for g in groups])
    bounds = np.cumsum([0] + [len(list(g)) for g in groups])
    lifted = design[:, cols]
    L = np.linalg.norm(lifted, 2) ** 2 / n
    w = np.zeros(cols.size)
    for _ in range(max_sweeps):
        v = w - lifted.T @ (lifted @ w - y) / (n * L)
        for start, stop in zip(bounds[:-1], bounds[1:]):
            norm = np.linalg.norm(v[start:stop])
            shrink = max(0.0, 1.0 - penalty / (L * norm)) if norm > 0 else 0.0
            v[start:stop] *= shrink
        done = np.linalg.norm(v - w) <= tol
        w = v
        if done:
            break
    x = np.zeros(p)
    np.add.at(x, cols, w)
    return x


class TestSolverConfig:
    """Tests for solver option validation."""

    def test_defaults(self):
        cfg = SolverConfig()
        assert cfg.max_iters == 5000
        assert cfg.step_rule is StepRule.FIXED_LIPSCHITZ
        assert cfg.to_dict()['penalty']['alpha'] == 1.0

    def test_invalid_values(self):
        with pytest.raises(ValueError):
            SolverConfig(max_iters=0)
        with pytest.raises(ValueError):
            SolverConfig(stationarity_tol=0.0)
        with pytest.raises(ValueError):
            SolverConfig(step_rule='newton')


class TestFit:
    """Tests for single-lambda fits."""

    @pytest.mark.parametrize('mode', ['soslasso', 'group', 'l1'])
    def test_above_lambda_max_is_zero(self, squared_problem, small_layout, mode):
        """At or above lambda_max the solution is exactly zero."""
        problem, _ = squared_problem
        penalty = PenaltyConfig(mode=mode)
        lam = lambda_max(problem, small_layout, penalty)
        assert lam > 0
        result = fit(problem, small_layout, 1.01 * lam, SolverConfig(penalty=penalty))
        assert result.converged
        assert not np.any(result.x_hat)
        assert result.selected_groups == []
        assert result.x_hat.shape == (14, 2)

    def test_below_lambda_max_is_nonzero(self, squared_problem, small_layout):
        problem, _ = squared_problem
        lam = lambda_max(problem, small_layout)
        result = fit(problem, small_layout, 0.5 * lam)
        assert result.nnz > 0

    @pytest.mark.parametrize('seed', range(20))
    def test_singletons_match_lasso(self, seed):
        """Singleton groups with alpha=1 give the lasso with weight 2 lambda."""
        rng = np.random.default_rng(500 + seed)
        problem, _ = make_squared_problem(rng, p=8, T=1, n=40, sigma=0.1, support=(0, 3))
        layout = replicate_across_tasks(singleton_groups(8), 1)
        lam = 0.05 * (1 + seed % 4)
        result = fit(problem, layout, lam, TIGHT)
        oracle = lasso_coordinate_descent(problem.designs[0], problem.responses[0], 2 * lam)
        assert result.converged
        np.testing.assert_allclose(result.x_hat[:, 0], oracle, atol=1e-5)

    def test_zero_lambda_is_least_squares(self, rng):
        """One all-covering group, lambda=0: the normal equations solution."""
        design = rng.standard_normal((30, 6))
        y = rng.standard_normal(30)
        problem = MultitaskProblem([design], [y])
        layout = replicate_across_tasks(build_group_set([range(6)], 6), 1)
        result = fit(problem, layout, 0.0, TIGHT)
        oracle = np.linalg.solve(design.T @ design, design.T @ y)
        assert result.converged
        np.testing.assert_allclose(result.x_hat[:, 0], oracle, atol=1e-6)

    def test_group_order_invariance(self, squared_problem, chain14):
        problem, _ = squared_problem
        lam = 0.05 * lambda_max(problem, replicate_across_tasks(chain14, 2))
        forward = fit(problem, replicate_across_tasks(chain14, 2), lam, TIGHT)
        shuffled = fit(problem, replicate_across_tasks(chain14.reordered([2, 0, 1]), 2), lam, TIGHT)
        np.testing.assert_allclose(shuffled.x_hat, forward.x_hat, atol=1e-6)
        assert shuffled.objective == pytest.approx(forward.objective, rel=1e-9)

    def test_group_mode_matches_latent_group_lasso(self, rng):
        """Overlapping groups in group mode agree with plain ISTA on the lifted design."""
        problem, _ = make_squared_problem(rng, p=8, T=1, n=60, sigma=0.1, support=(2, 3, 4))
        groups = [range(0, 5), range(3, 8)]
        layout = replicate_across_tasks(build_group_set(groups, 8), 1)
        cfg = SolverConfig(max_iters=20000, rel_obj_tol=1e-12, stationarity_tol=1e-9,
                           penalty=PenaltyConfig(mode=PenaltyMode.GROUP_ONLY))
        lam = 0.3 * lambda_max(problem, layout, cfg.penalty)
        result = fit(problem, layout, lam, cfg)
        oracle = latent_group_lasso_ista(problem.designs[0], problem.responses[0], groups, lam)
        assert result.converged
        np.testing.assert_allclose(result.x_hat[:, 0], oracle, atol=1e-5)

    def test_l1_mode_matches_lasso(self, rng):
        problem, _ = make_squared_problem(rng, p=8, T=1, n=40, sigma=0.1, support=(1, 2))
        layout = replicate_across_tasks(build_group_set([range(0, 5), range(3, 8)], 8), 1)
        lam = 0.03
        cfg = SolverConfig(max_iters=20000, rel_obj_tol=1e-12, stationarity_tol=1e-9,
                           penalty=PenaltyConfig(mode=PenaltyMode.L1_ONLY))
        result = fit(problem, layout, lam, cfg)
        oracle = lasso_coordinate_descent(problem.designs[0], problem.responses[0], lam)
        np.testing.assert_allclose(result.x_hat[:, 0], oracle, atol=1e-5)

    @pytest.mark.parametrize('mode,alpha', [('group', 2.0), ('soslasso', 1.0)])
    def test_orthogonal_design_closed_form(self, rng, mode, alpha):
        """With Phi^T Phi / n = I and disjoint groups the fit is a per-group shrinkage of z."""
        n = 30
        q, _ = np.linalg.qr(rng.standard_normal((n, 8)))
        design = np.sqrt(n) * q
        z = np.array([2.0, -1.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.1])
        problem = MultitaskProblem([design], [design @ z])
        layout = replicate_across_tasks(build_group_set([range(0, 4), range(4, 8)], 8), 1)
        lam = 0.3
        expected = np.zeros(8)
        for rows in (slice(0, 4), slice(4, 8)):
            v = z[rows]
            if mode == 'soslasso':
                v = np.sign(v) * np.maximum(np.abs(v) - lam, 0.0)
            norm = np.linalg.norm(v)
            if norm > lam * alpha:
                expected[rows] = (1.0 - lam * alpha / norm) * v
        cfg = SolverConfig(max_iters=20000, rel_obj_tol=1e-12, stationarity_tol=1e-9,
                           penalty=PenaltyConfig(alpha=alpha, mode=mode))
        result = fit(problem, layout, lam, cfg)
        assert result.converged
        np.testing.assert_allclose(result.x_hat[:, 0], expected, atol=1e-6)
        assert not np.any(result.x_hat[4:, 0])

    def test_certified_residual(self, squared_problem, small_layout):
        problem, _ = squared_problem
        lam = 0.1 * lambda_max(problem, small_layout)
        result = fit(problem, small_layout, lam)
        assert result.converged
        assert result.stationarity_residual <= 1e-6 * (1 + np.linalg.norm(result.w_dup))
        assert result.gradient_mapping_norm >= 0

    def test_objective_trace_monotone(self, squared_problem, small_layout):
        problem, _ = squared_problem
        result = fit(problem, small_layout, 0.05 * lambda_max(problem, small_layout))
        trace = np.array(result.objective_trace)
        assert np.all(np.diff(trace) <= 1e-12 * max(1.0, abs(trace[0])))
        assert result.objective == pytest.approx(
            objective(problem, small_layout, result.w_dup, result.lambda_))

    def test_recovers_planted_support(self, squared_problem, small_layout):
        """Low noise, moderate lambda: the first group carries the signal."""
        problem, truth = squared_problem
        result = fit(problem, small_layout, 0.01 * lambda_max(problem, small_layout))
        assert 0 in result.selected_groups
        assert np.max(np.abs(result.x_hat - truth)) < 0.25

    def test_backtracking_agrees(self, squared_problem, small_layout):
        problem, _ = squared_problem
        lam = 0.1 * lambda_max(problem, small_layout)
        fixed = fit(problem, small_layout, lam)
        bt = fit(problem, small_layout, lam, SolverConfig(step_rule=StepRule.BACKTRACKING))
        np.testing.assert_allclose(bt.x_hat, fixed.x_hat, atol=1e-4)

    def test_uncovered_coordinates(self, squared_problem):
        problem, _ = squared_problem
        layout = replicate_across_tasks(build_group_set([range(0, 6)], 14), 2)
        with pytest.raises(UncoveredSupport):
            fit(problem, layout, 0.1)

    def test_bad_warm_start(self, squared_problem, small_layout):
        problem, _ = squared_problem
        with pytest.raises(DimensionMismatch):
            fit(problem, small_layout, 0.1, warm_start=np.zeros(5))

    def test_negative_lambda(self, squared_problem, small_layout):
        problem, _ = squared_problem
        with pytest.raises(ValueError):
            fit(problem, small_layout, -1.0)

    def test_iteration_cap_reported(self, squared_problem, small_layout):
        """Hitting max_iters is reported, not raised."""
        problem, _ = squared_problem
        result = fit(problem, small_layout, 0.01 * lambda_max(problem, small_layout),
                     SolverConfig(max_iters=2))
        assert not result.converged
        assert result.iterations == 2
        assert result.diagnostics()['converged'] is False

    def test_logistic_fit(self, logistic_problem, small_layout):
        problem, _ = logistic_problem
        result = fit(problem, small_layout, 0.05 * lambda_max(problem, small_layout))
        assert result.converged
        scores = np.concatenate(problem.predict(result.x_hat))
        labels = np.concatenate(problem.responses)
        assert misclassification_rate(scores, labels) < 0.3


class TestRegPath:
    """Tests for warm-started regularization paths."""

    def test_path_matches_cold_fits(self, squared_problem, small_layout):
        problem, _ = squared_problem
        grid = default_lambda_grid(lambda_max(problem, small_layout), count=6, min_ratio=0.01)
        path = reg_path(problem, small_layout, grid)
        assert [r.lambda_ for r in path] == pytest.approx(list(grid))
        assert all(r.converged for r in path)
        cold = fit(problem, small_layout, float(grid[-1]))
        assert path[-1].objective == pytest.approx(cold.objective, rel=1e-6)
        assert path[0].nnz == 0
        assert path[-1].nnz > 0

    def test_not_descending(self, squared_problem, small_layout):
        problem, _ = squared_problem
        with pytest.raises(InvalidLambdaGrid):
            reg_path(problem, small_layout, [0.1, 0.2])
        with pytest.raises(InvalidLambdaGrid):
            reg_path(problem, small_layout, [0.1, 0.1])

    def test_objective_falls_along_path(self, squared_problem, small_layout):
        """Optimal objective is nonincreasing as lambda decreases over a 10-point grid."""
        problem, _ = squared_problem
        grid = default_lambda_grid(lambda_max(problem, small_layout), count=10, min_ratio=0.01)
        path = reg_path(problem, small_layout, grid, TIGHT)
        assert all(r.converged for r in path)
        assert np.all(np.diff([r.objective for r in path]) <= 1e-9)

    def test_lipschitz_estimated_once(self, squared_problem, small_layout, monkeypatch):
        problem, _ = squared_problem
        calls = []
        estimate = solver_module.lipschitz_estimate

        def counting(*args, **kwargs):
            calls.append(args)
            return estimate(*args, **kwargs)

        monkeypatch.setattr(solver_module, 'lipschitz_estimate', counting)
        grid = default_lambda_grid(lambda_max(problem, small_layout), count=4, min_ratio=0.1)
        reg_path(problem, small_layout, grid)
        assert len(calls) == 1

    def test_empty_or_negative(self, squared_problem, small_layout):
        problem, _ = squared_problem
        with pytest.raises(InvalidLambdaGrid):
            reg_path(problem, small_layout, [])
        with pytest.raises(InvalidLambdaGrid):
            reg_path(problem, small_layout, [0.1, -0.1])


class TestLambdaGrid:
    """Tests for lambda_max and the default grid."""

    def test_default_grid(self):
        grid = default_lambda_grid(2.0)
        assert grid.size == 30
        assert grid[0] == pytest.approx(2.0)
        assert grid[-1] == pytest.approx(2e-3)
        assert np.all(np.diff(grid) < 0)

    def test_zero_lambda_max(self):
        assert default_lambda_grid(0.0).tolist() == [0.0]

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            default_lambda_grid(1.0, count=0)
        with pytest.raises(ValueError):
            default_lambda_grid(1.0, min_ratio=1.0)

    def test_zero_response(self, small_layout):
        """No signal means lambda_max is zero."""
        problem = MultitaskProblem([np.ones((5, 14))] * 2, [np.zeros(5)] * 2)
        assert lambda_max(problem, small_layout) == 0.0

    def test_alpha_scaling(self, squared_problem, small_layout):
        """Larger alpha lowers the bound."""
        problem, _ = squared_problem
        low = lambda_max(problem, small_layout, PenaltyConfig(alpha=0.5))
        high = lambda_max(problem, small_layout, PenaltyConfig(alpha=4.0))
        assert high < low


class TestSelection:
    """Tests for clairvoyant and cross-validated lambda choice."""

    def test_clairvoyant(self, squared_problem, small_layout):
        problem, truth = squared_problem
        grid = default_lambda_grid(lambda_max(problem, small_layout), count=8, min_ratio=0.001)
        lam, result, table = clairvoyant_select(problem, small_layout, truth, grid)
        assert len(table) == 8
        assert lam in [row[0] for row in table]
        best = min(err for _, err in table)
        assert dict(table)[lam] == best
        assert result.lambda_ == lam

    def test_clairvoyant_truth_shape(self, squared_problem, small_layout):
        problem, truth = squared_problem
        with pytest.raises(DimensionMismatch):
            clairvoyant_select(problem, small_layout, truth.T, [0.1])

    def test_cross_validate_deterministic(self, squared_problem, small_layout):
        problem, _ = squared_problem
        grid = default_lambda_grid(lambda_max(problem, small_layout), count=5, min_ratio=0.01)
        best_a, table_a = cross_validate(problem, small_layout, grid, folds=4, seed=3)
        best_b, table_b = cross_validate(problem, small_layout, grid, folds=4, seed=3, threads=2)
        assert best_a == best_b
        assert table_a == table_b
        assert [lam for lam, _ in table_a] == pytest.approx(sorted(grid, reverse=True))

    def test_cross_validate_prefers_signal(self, squared_problem, small_layout):
        """Held-out error at lambda_max (all zero) is worse than at the chosen lambda."""
        problem, _ = squared_problem
        grid = default_lambda_grid(lambda_max(problem, small_layout), count=5, min_ratio=0.01)
        best, table = cross_validate(problem, small_layout, grid, folds=4)
        assert best < grid[0]
        assert dict(table)[best] < table[0][1]

    def test_too_few_samples(self, small_layout, rng):
        problem = MultitaskProblem([rng.standard_normal((3, 14))] * 2, [np.zeros(3)] * 2)
        with pytest.raises(TooFewSamples):
            cross_validate(problem, small_layout, [0.1], folds=4)
        with pytest.raises(TooFewSamples):
            cross_validate(problem, small_layout, [0.1], folds=1)

    def test_repeated_lambdas(self, squared_problem, small_layout):
        problem, _ = squared_problem
        with pytest.raises(InvalidLambdaGrid):
            cross_validate(problem, small_layout, [0.1, 0.1])

    def test_folds_follow_kfold(self, squared_problem, small_layout, monkeypatch):
        """Each fold holds out the rows a shuffled KFold with the same seed picks."""
        problem, _ = squared_problem
        seen = []

        def record(problem, layout, grid, cfg, rows):
            seen.append([np.asarray(r).tolist() for r in rows])
            return np.zeros(grid.size)

        monkeypatch.setattr(solver_module, '_fold_errors', record)
        cross_validate(problem, small_layout, [0.2, 0.1], folds=4, seed=3)
        expected = [test.tolist() for _, test in
                    KFold(n_splits=4, shuffle=True, random_state=3).split(np.arange(40))]
        assert seen == [[rows, rows] for rows in expected]

    def test_leave_one_out(self):
        """Six samples with six folds: every row is held out once."""
        rng = np.random.default_rng(21)
        design = rng.standard_normal((6, 4))
        y = design @ np.array([1.0, -1.0, 0.0, 0.0]) + 0.01 * rng.standard_normal(6)
        problem = MultitaskProblem([design], [y])
        layout = replicate_across_tasks(build_group_set([range(0, 3), range(1, 4)], 4), 1)
        best, table = cross_validate(problem, layout, [0.01, 1.0, 0.1], folds=6)
        assert [lam for lam, _ in table] == [1.0, 0.1, 0.01]
        assert best in (1.0, 0.1, 0.01)
        assert all(np.isfinite(err) for _, err in table)
        with pytest.raises(TooFewSamples):
            cross_validate(problem, layout, [0.1], folds=7)

    def test_logistic_cv(self, logistic_problem, small_layout):
        problem, _ = logistic_problem
        grid = default_lambda_grid(lambda_max(problem, small_layout), count=4, min_ratio=0.05)
        best, table = cross_validate(problem, small_layout, grid, folds=3)
        assert all(0.0 <= err <= 1.0 for _, err in table)
