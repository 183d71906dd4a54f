# Loss functions for multitask SOSlasso
"""
losses.py - Multitask problems, squared and logistic losses, step sizes

A MultitaskProblem holds one design matrix and one response vector per
task. Losses are evaluated on the duplicated coordinates of a TaskLayout:
the duplicated vector is expanded to the stacked T*p coefficient vector,
each task's loss is computed on its own slice, and the gradient is pulled
back through the expansion (gradient of copy = gradient of its origin).

Per-task normalization:
- squared:  (1 / 2 n_t) ||y_t - Phi_t x_t||^2
- logistic: (1 / n_t) sum_i log(1 + exp(-y_ti <phi_ti, x_t>))

Usage:
    problem = MultitaskProblem(designs, responses, LossKind.SQUARED)
    ev = evaluate_loss(problem, layout, w_dup)   # ev.value, ev.grad
    L = lipschitz_estimate(problem, layout.base_dm)
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import svdvals
from scipy.special import expit

from .errors import BadLabels, DimensionMismatch, UnequalSampleSizes
from .groups import DuplicationMap, TaskLayout, expand

logger = logging.getLogger(__name__)


class LossKind(Enum):
    """Supported per-task losses."""
    SQUARED = 'squared'
    LOGISTIC = 'logistic'

    @classmethod
    def parse(cls, name: Union[str, 'LossKind']) -> 'LossKind':
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            raise ValueError(f"Unknown loss kind: {name}") from None


@dataclass(eq=False)
class MultitaskProblem:
    """Per-task designs and responses.

    Attributes:
        designs: T matrices of shape (n_t, p)
        responses: T vectors of length n_t (labels +1/-1 for logistic)
        loss_kind: Loss applied to every task
        noise_sigma: Known noise level, metadata only
    """
    designs: List[np.ndarray]
    responses: List[np.ndarray]
    loss_kind: LossKind = LossKind.SQUARED
    noise_sigma: Optional[float] = None

    def __post_init__(self):
        self.loss_kind = LossKind.parse(self.loss_kind)
        self.designs = [np.asarray(d, dtype=np.float64) for d in self.designs]
        self.responses = [np.asarray(y, dtype=np.float64).ravel() for y in self.responses]
        if len(self.designs) == 0:
            raise DimensionMismatch("problem needs at least one task")
        if len(self.designs) != len(self.responses):
            raise DimensionMismatch(
                f"{len(self.designs)} designs but {len(self.responses)} responses")
        p = None
        for t, (design, y) in enumerate(zip(self.designs, self.responses)):
            if design.ndim != 2:
                raise DimensionMismatch(f"design of task {t} must be 2-D: shape {design.shape}")
            if p is None:
                p = design.shape[1]
            if design.shape[1] != p:
                raise DimensionMismatch(
                    f"task {t} has {design.shape[1]} columns, expected {p}")
            if design.shape[0] < 1:
                raise DimensionMismatch(f"task {t} has no samples")
            if y.shape[0] != design.shape[0]:
                raise DimensionMismatch(
                    f"task {t}: {design.shape[0]} rows but {y.shape[0]} responses")
            if self.loss_kind is LossKind.LOGISTIC and not np.all(np.abs(y) == 1.0):
                bad = np.unique(y[np.abs(y) != 1.0])[:5]
                raise BadLabels(f"task {t} has labels other than +1/-1: {bad.tolist()}")
        if self.noise_sigma is not None and self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0: {self.noise_sigma}")
        self._stacked = None
        if self.equal_sizes:
            self._stacked = np.stack(self.designs)

    @property
    def T(self) -> int:
        return len(self.designs)

    @property
    def p(self) -> int:
        return self.designs[0].shape[1]

    @property
    def sample_sizes(self) -> List[int]:
        return [d.shape[0] for d in self.designs]

    @property
    def equal_sizes(self) -> bool:
        return len(set(self.sample_sizes)) == 1

    def common_n(self) -> int:
        """The shared sample size.

        Raises:
            UnequalSampleSizes: Tasks differ in sample count
        """
        if not self.equal_sizes:
            raise UnequalSampleSizes(f"tasks have different sample sizes: {self.sample_sizes}")
        return self.sample_sizes[0]

    def subset_rows(self, rows: Sequence[np.ndarray]) -> 'MultitaskProblem':
        """Problem restricted to the given row indices of each task."""
        if len(rows) != self.T:
            raise DimensionMismatch(f"need row indices for {self.T} tasks, got {len(rows)}")
        return MultitaskProblem(
            [d[idx] for d, idx in zip(self.designs, rows)],
            [y[idx] for y, idx in zip(self.responses, rows)],
            self.loss_kind, self.noise_sigma)

    def predict(self, x_hat: np.ndarray) -> List[np.ndarray]:
        """Per-task linear scores Phi_t x_t for a p x T coefficient matrix."""
        x_hat = np.asarray(x_hat, dtype=np.float64)
        if x_hat.shape != (self.p, self.T):
            raise DimensionMismatch(
                f"expected a {self.p} x {self.T} matrix, got shape {x_hat.shape}")
        return list(_forward(self, x_hat.T))

    def __repr__(self) -> str:
        return (f"MultitaskProblem(T={self.T}, p={self.p}, n={self.sample_sizes}, "
                f"loss={self.loss_kind.value})")


@dataclass
class LossEval:
    """Loss value and gradient over duplicated multitask coordinates."""
    value: float
    grad: np.ndarray


def _forward(problem: MultitaskProblem, X: np.ndarray):
    """Per-task scores for X of shape (T, p)."""
    if problem._stacked is not None:
        return np.matmul(problem._stacked, X[:, :, None])[:, :, 0]
    return [d @ x for d, x in zip(problem.designs, X)]


def _adjoint(problem: MultitaskProblem, R) -> np.ndarray:
    """Per-task Phi_t^T r_t stacked to shape (T, p)."""
    if problem._stacked is not None:
        return np.matmul(problem._stacked.transpose(0, 2, 1), np.asarray(R)[:, :, None])[:, :, 0]
    return np.stack([d.T @ r for d, r in zip(problem.designs, R)])


def loss_and_gradient_x(problem: MultitaskProblem, X: np.ndarray) -> Tuple[float, np.ndarray]:
    """Loss value and gradient in the original space.

    Args:
        problem: Multitask problem
        X: Coefficients of shape (T, p), row t for task t

    Returns:
        (value, gradient of shape (T, p))
    """
    X = np.asarray(X, dtype=np.float64)
    if X.shape != (problem.T, problem.p):
        raise DimensionMismatch(
            f"expected coefficients of shape {(problem.T, problem.p)}, got {X.shape}")
    scores = _forward(problem, X)
    value = 0.0
    weights = []
    for t in range(problem.T):
        y = problem.responses[t]
        n_t = y.shape[0]
        if problem.loss_kind is LossKind.SQUARED:
            r = scores[t] - y
            value += float(r @ r) / (2.0 * n_t)
            weights.append(r / n_t)
        else:
            margin = -y * scores[t]
            value += float(np.logaddexp(0.0, margin).sum()) / n_t
            weights.append(-y * expit(margin) / n_t)
    if problem._stacked is not None:
        weights = np.stack(weights)
    return value, _adjoint(problem, weights)


def _check_layout(problem: MultitaskProblem, layout: TaskLayout) -> None:
    if layout.p != problem.p or layout.T != problem.T:
        raise DimensionMismatch(
            f"layout is {layout.T} tasks x {layout.p} coordinates, "
            f"problem is {problem.T} x {problem.p}")


def evaluate_loss(problem: MultitaskProblem, layout: TaskLayout,
                  w_dup_all: np.ndarray) -> LossEval:
    """Loss and gradient with respect to the duplicated coordinates."""
    _check_layout(problem, layout)
    x_all = expand(layout.dm, w_dup_all)
    value, grad_x = loss_and_gradient_x(problem, x_all.reshape(problem.T, problem.p))
    return LossEval(value, grad_x.reshape(-1)[layout.dm.origin])


def squared_loss(problem: MultitaskProblem, layout: TaskLayout,
                 w_dup_all: np.ndarray) -> LossEval:
    """sum_t (1/2n_t) ||y_t - Phi_t x_t||^2 and its duplicated gradient."""
    if problem.loss_kind is not LossKind.SQUARED:
        raise ValueError(f"squared_loss needs a squared problem, got {problem.loss_kind.value}")
    return evaluate_loss(problem, layout, w_dup_all)


def logistic_loss(problem: MultitaskProblem, layout: TaskLayout,
                  w_dup_all: np.ndarray) -> LossEval:
    """sum_t (1/n_t) sum_i log(1 + exp(-y_ti <phi_ti, x_t>)) and its gradient."""
    if problem.loss_kind is not LossKind.LOGISTIC:
        raise ValueError(f"logistic_loss needs a logistic problem, got {problem.loss_kind.value}")
    return evaluate_loss(problem, layout, w_dup_all)


def _power_iteration(design: np.ndarray, dm: DuplicationMap, tol: float,
                     max_iters: int) -> Tuple[float, bool]:
    """Largest eigenvalue of lifted^T lifted without forming the lifted design."""
    rng = np.random.default_rng(0)
    v = rng.standard_normal(dm.total_dup)
    v /= np.linalg.norm(v)
    estimate = 0.0
    for _ in range(max_iters):
        u = design @ expand(dm, v)
        new_estimate = float(u @ u)
        if new_estimate == 0.0:
            return 0.0, True
        z = (design.T @ u)[dm.origin]
        v = z / np.linalg.norm(z)
        if abs(new_estimate - estimate) <= tol * new_estimate:
            return new_estimate, True
        estimate = new_estimate
    return estimate, False


def lipschitz_estimate(problem: MultitaskProblem, dm: DuplicationMap,
                       tol: float = 1e-4, max_iters: int = 1000,
                       inflation: float = 1.01) -> float:
    """Upper estimate of the gradient Lipschitz constant over duplicated coordinates.

    max_t sigma_max(lifted_t^T lifted_t) / n_t by power iteration, inflated by
    1.01; a quarter of that for the logistic loss. A task whose power
    iteration does not settle uses the Frobenius bound instead.

    Args:
        problem: Multitask problem
        dm: Duplication map of the per-task GroupSet
    """
    if dm.p != problem.p:
        raise DimensionMismatch(f"duplication map is over {dm.p} coordinates, problem has {problem.p}")
    best = 0.0
    for t, design in enumerate(problem.designs):
        top, ok = _power_iteration(design, dm, tol, max_iters)
        if ok:
            top *= inflation
        else:
            top = float(dm.counts @ (design * design).sum(axis=0))
            logger.warning("power iteration did not settle for task %d; "
                           "using Frobenius bound %.4e", t, top)
        best = max(best, top / design.shape[0])
    if problem.loss_kind is LossKind.LOGISTIC:
        best *= 0.25
    return best


def max_group_singular(problem: MultitaskProblem, layout: TaskLayout) -> float:
    """max over replicated groups of sigma_max(Phi_G^T Phi_G).

    The block-diagonal design restricted to a replicated group is block
    diagonal over tasks, so its top eigenvalue is the largest per-task one.
    """
    _check_layout(problem, layout)
    best = 0.0
    for members in layout.base.groups:
        cols = list(members)
        for design in problem.designs:
            s = svdvals(design[:, cols])
            if s.size:
                best = max(best, float(s[0]) ** 2)
    return best
