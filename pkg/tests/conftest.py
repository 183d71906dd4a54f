# pytest configuration for SOSlasso toolkit tests
"""
Shared fixtures and configuration for pytest test suite.
"""
import os
import sys

import pytest
import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from soslasso import (  # noqa: E402
    LossKind,
    MultitaskProblem,
    chain_groups,
    replicate_across_tasks,
)


# Small overlapping geometry used across tests: 3 groups of 6 over 14 coordinates
SMALL_P = 14
SMALL_B = 6
SMALL_SHIFT = 4


@pytest.fixture
def rng() -> np.random.Generator:
    """Deterministic generator."""
    return np.random.default_rng(12345)


@pytest.fixture
def chain14():
    """chain_groups(14, 6, 4): groups {0..5}, {4..9}, {8..13}."""
    return chain_groups(SMALL_P, SMALL_B, SMALL_SHIFT)


def make_squared_problem(rng: np.random.Generator, p: int = SMALL_P, T: int = 2, n: int = 40,
                         sigma: float = 0.01, support=(0, 1, 2)):
    """Gaussian designs, a planted signal on `support`, small noise."""
    truth = np.zeros((p, T))
    truth[list(support), :] = rng.uniform(0.5, 1.5, size=(len(support), T))
    designs = [rng.standard_normal((n, p)) for _ in range(T)]
    responses = [d @ truth[:, t] + sigma * rng.standard_normal(n) for t, d in enumerate(designs)]
    return MultitaskProblem(designs, responses, LossKind.SQUARED, noise_sigma=sigma), truth


def make_logistic_problem(rng: np.random.Generator, p: int = SMALL_P, T: int = 2, n: int = 60):
    truth = np.zeros((p, T))
    truth[:3, :] = 2.0
    designs = [rng.standard_normal((n, p)) for _ in range(T)]
    responses = []
    for t, d in enumerate(designs):
        y = np.sign(d @ truth[:, t] + 0.5 * rng.standard_normal(n))
        y[y == 0] = 1.0
        responses.append(y)
    return MultitaskProblem(designs, responses, LossKind.LOGISTIC), truth


@pytest.fixture
def squared_problem(rng):
    """(problem, truth) with T=2, p=14, n=40."""
    return make_squared_problem(rng)


@pytest.fixture
def logistic_problem(rng):
    return make_logistic_problem(rng)


@pytest.fixture
def small_layout(chain14):
    """chain14 replicated over 2 tasks."""
    return replicate_across_tasks(chain14, 2)


def assert_close(a, b, tol: float = 1e-8):
    """Assert two arrays agree elementwise within an absolute tolerance."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    assert a.shape == b.shape, f"shapes differ: {a.shape} vs {b.shape}"
    err = float(np.max(np.abs(a - b))) if a.size else 0.0
    assert err <= tol, f"max abs difference {err} exceeds {tol}"
