# Tests for Loss Module
"""
test_losses - Unit tests for multitask losses, gradients and step-size estimates.
"""

import pytest
import numpy as np
import sys
import os

from scipy.linalg import eigvalsh

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from soslasso.errors import BadLabels, DimensionMismatch, UnequalSampleSizes
from soslasso.groups import (
    build_group_set,
    chain_groups,
    duplication_map,
    lift_design,
    replicate_across_tasks,
    singleton_groups,
)
from soslasso.losses import (
    LossKind,
    MultitaskProblem,
    evaluate_loss,
    lipschitz_estimate,
    logistic_loss,
    loss_and_gradient_x,
    max_group_singular,
    squared_loss,
)


def central_difference(fn, w, h=1e-5):
    grad = np.zeros_like(w)
    for i in range(w.size):
        e = np.zeros_like(w)
        e[i] = h
        grad[i] = (fn(w + e) - fn(w - e)) / (2 * h)
    return grad


def random_problem(rng, kind, p, T, n):
    designs = [rng.standard_normal((n, p)) for _ in range(T)]
    if kind is LossKind.LOGISTIC:
        responses = [np.where(rng.random(n) < 0.5, -1.0, 1.0) for _ in range(T)]
    else:
        responses = [rng.standard_normal(n) for _ in range(T)]
    return MultitaskProblem(designs, responses, kind)


class TestMultitaskProblem:
    """Tests for problem validation."""

    def test_shapes(self, squared_problem):
        problem, _ = squared_problem
        assert problem.T == 2
        assert problem.p == 14
        assert problem.sample_sizes == [40, 40]
        assert problem.common_n() == 40

    def test_column_mismatch(self, rng):
        with pytest.raises(DimensionMismatch):
            MultitaskProblem([np.zeros((3, 4)), np.zeros((3, 5))], [np.zeros(3), np.zeros(3)])

    def test_row_mismatch(self):
        with pytest.raises(DimensionMismatch):
            MultitaskProblem([np.zeros((3, 4))], [np.zeros(2)])

    def test_bad_labels(self):
        with pytest.raises(BadLabels):
            MultitaskProblem([np.zeros((3, 2))], [np.array([1.0, 0.0, -1.0])], 'logistic')

    def test_unequal_sizes(self, rng):
        problem = MultitaskProblem([rng.standard_normal((5, 3)), rng.standard_normal((7, 3))],
                                   [np.zeros(5), np.zeros(7)])
        assert not problem.equal_sizes
        with pytest.raises(UnequalSampleSizes):
            problem.common_n()

    def test_subset_rows(self, squared_problem):
        problem, _ = squared_problem
        sub = problem.subset_rows([np.arange(10), np.arange(5)])
        assert sub.sample_sizes == [10, 5]
        np.testing.assert_array_equal(sub.designs[1], problem.designs[1][:5])

    def test_predict(self, squared_problem):
        problem, truth = squared_problem
        scores = problem.predict(truth)
        np.testing.assert_allclose(scores[1], problem.designs[1] @ truth[:, 1])


class TestSquaredLoss:
    """Tests for the multitask squared loss."""

    def test_zero(self, small_layout):
        problem = MultitaskProblem([np.ones((4, 14))] * 2, [np.zeros(4)] * 2)
        ev = squared_loss(problem, small_layout, np.zeros(small_layout.dm.total_dup))
        assert ev.value == 0.0
        assert not np.any(ev.grad)
        assert ev.grad.shape == (2 * 18,)

    def test_exact_fit(self, rng, small_layout):
        from soslasso.groups import even_split
        truth = rng.standard_normal((14, 2))
        designs = [rng.standard_normal((6, 14)) for _ in range(2)]
        problem = MultitaskProblem(designs, [d @ truth[:, t] for t, d in enumerate(designs)])
        w = even_split(small_layout.dm, small_layout.stack(truth))
        assert squared_loss(problem, small_layout, w).value == pytest.approx(0.0, abs=1e-20)

    def test_gradient_check(self, rng):
        """Analytic gradient vs central differences on random small instances."""
        for trial in range(25):
            p = int(rng.integers(4, 21))
            T = int(rng.integers(1, 4))
            n = int(rng.integers(5, 31))
            gs = build_group_set([range(0, p // 2 + 1), range(p // 2 - 1, p)], p)
            layout = replicate_across_tasks(gs, T)
            problem = random_problem(rng, LossKind.SQUARED, p, T, n)
            w = rng.standard_normal(layout.dm.total_dup)
            analytic = squared_loss(problem, layout, w).grad
            numeric = central_difference(lambda v: squared_loss(problem, layout, v).value, w)
            assert np.max(np.abs(analytic - numeric)) <= 1e-6

    def test_gradient_at_truth_is_noise_correlation(self, rng):
        """Gradient at the true coefficients is -(1/n) Phi^T eta per task."""
        n, p = 30, 8
        truth = rng.standard_normal((1, p))
        design = rng.standard_normal((n, p))
        noise = 0.3 * rng.standard_normal(n)
        problem = MultitaskProblem([design], [design @ truth[0] + noise])
        _, grad = loss_and_gradient_x(problem, truth)
        np.testing.assert_allclose(grad[0], -design.T @ noise / n, atol=1e-12)

    def test_unequal_sizes_supported(self, rng):
        problem = MultitaskProblem([rng.standard_normal((5, 3)), rng.standard_normal((9, 3))],
                                   [rng.standard_normal(5), rng.standard_normal(9)])
        layout = replicate_across_tasks(singleton_groups(3), 2)
        w = rng.standard_normal(layout.dm.total_dup)
        x = layout.unstack(w)
        expected = sum(np.sum((d @ x[:, t] - y) ** 2) / (2 * d.shape[0])
                       for t, (d, y) in enumerate(zip(problem.designs, problem.responses)))
        assert squared_loss(problem, layout, w).value == pytest.approx(expected)

    def test_wrong_kind(self, logistic_problem, small_layout):
        problem, _ = logistic_problem
        with pytest.raises(ValueError):
            squared_loss(problem, small_layout, np.zeros(small_layout.dm.total_dup))

    def test_layout_mismatch(self, squared_problem):
        problem, _ = squared_problem
        layout = replicate_across_tasks(chain_groups(14, 6, 4), 3)
        with pytest.raises(DimensionMismatch):
            evaluate_loss(problem, layout, np.zeros(layout.dm.total_dup))


class TestLogisticLoss:
    """Tests for the multitask logistic loss."""

    def test_value_at_zero(self, logistic_problem, small_layout):
        problem, _ = logistic_problem
        ev = logistic_loss(problem, small_layout, np.zeros(small_layout.dm.total_dup))
        assert ev.value == pytest.approx(2 * np.log(2.0))

    def test_gradient_check(self, rng):
        for trial in range(25):
            p = int(rng.integers(4, 21))
            T = int(rng.integers(1, 4))
            n = int(rng.integers(5, 31))
            layout = replicate_across_tasks(chain_groups(p, p, 1), T)
            problem = random_problem(rng, LossKind.LOGISTIC, p, T, n)
            w = 0.5 * rng.standard_normal(layout.dm.total_dup)
            analytic = logistic_loss(problem, layout, w).grad
            numeric = central_difference(lambda v: logistic_loss(problem, layout, v).value, w)
            assert np.max(np.abs(analytic - numeric)) <= 1e-6

    def test_separable_data_monotone(self, rng):
        """Along a separating direction the loss decreases towards zero."""
        design = rng.standard_normal((20, 3))
        direction = np.array([1.0, -1.0, 0.5])
        labels = np.where(design @ direction >= 0, 1.0, -1.0)
        problem = MultitaskProblem([design], [labels], LossKind.LOGISTIC)
        values = [loss_and_gradient_x(problem, (s * direction)[None, :])[0]
                  for s in [0.0, 1.0, 2.0, 5.0, 10.0, 50.0]]
        assert all(b < a for a, b in zip(values, values[1:]))
        assert values[-1] < 0.1 * values[0]

    def test_wrong_kind(self, squared_problem, small_layout):
        problem, _ = squared_problem
        with pytest.raises(ValueError):
            logistic_loss(problem, small_layout, np.zeros(small_layout.dm.total_dup))


class TestLipschitzEstimate:
    """Tests for the gradient Lipschitz constant."""

    def test_orthonormal_design(self, rng):
        n, p = 12, 5
        q, _ = np.linalg.qr(rng.standard_normal((n, p)))
        problem = MultitaskProblem([q], [np.zeros(n)])
        est = lipschitz_estimate(problem, duplication_map(singleton_groups(p)))
        assert est == pytest.approx(1.01 / n, rel=1e-3)

    def test_zero_design(self):
        problem = MultitaskProblem([np.zeros((4, 3))], [np.zeros(4)])
        assert lipschitz_estimate(problem, duplication_map(singleton_groups(3))) == 0.0

    def test_matches_dense_eigensolver(self, rng):
        """Within 1% above the exact largest eigenvalue of the lifted Gram matrix."""
        design = rng.standard_normal((20, 10))
        gs = build_group_set([range(0, 6), range(4, 10)], 10)
        dm = duplication_map(gs)
        problem = MultitaskProblem([design], [np.zeros(20)])
        lifted = lift_design(dm, design)
        exact = eigvalsh(lifted.T @ lifted)[-1] / 20
        est = lipschitz_estimate(problem, dm)
        assert exact <= est <= 1.0101 * exact

    def test_logistic_quarter(self, rng):
        design = rng.standard_normal((10, 4))
        dm = duplication_map(singleton_groups(4))
        sq = lipschitz_estimate(MultitaskProblem([design], [np.zeros(10)]), dm)
        lg = lipschitz_estimate(MultitaskProblem([design], [np.ones(10)], 'logistic'), dm)
        assert lg == pytest.approx(0.25 * sq)

    def test_descent_lemma(self, squared_problem, small_layout, rng):
        """f(w') <= f(w) + <grad, w' - w> + L/2 ||w' - w||^2 on random pairs."""
        problem, _ = squared_problem
        L = lipschitz_estimate(problem, small_layout.base_dm)
        for _ in range(100):
            w = rng.standard_normal(small_layout.dm.total_dup)
            v = w + rng.standard_normal(w.size) * rng.uniform(0.01, 2.0)
            a = squared_loss(problem, small_layout, w)
            b = squared_loss(problem, small_layout, v)
            d = v - w
            assert b.value <= a.value + a.grad @ d + 0.5 * L * (d @ d) + 1e-9


class TestMaxGroupSingular:
    """Tests for the largest group singular value."""

    def test_identity_designs(self, chain14):
        problem = MultitaskProblem([np.eye(14)] * 2, [np.zeros(14)] * 2)
        assert max_group_singular(problem, replicate_across_tasks(chain14, 2)) == pytest.approx(1.0)

    def test_single_group(self, rng):
        design = rng.standard_normal((9, 5))
        problem = MultitaskProblem([design], [np.zeros(9)])
        layout = replicate_across_tasks(build_group_set([range(5)], 5), 1)
        assert max_group_singular(problem, layout) == pytest.approx(eigvalsh(design.T @ design)[-1],
                                                                    rel=1e-10)

    def test_per_group_oracle(self, squared_problem, small_layout):
        problem, _ = squared_problem
        expected = max(eigvalsh(d[:, list(g)].T @ d[:, list(g)])[-1]
                       for g in small_layout.base.groups for d in problem.designs)
        assert max_group_singular(problem, small_layout) == pytest.approx(expected, rel=1e-6)
