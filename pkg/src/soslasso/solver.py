# SOSlasso solver
"""
solver.py - Penalized multitask fits, regularization paths and lambda selection

Minimizes  sum_t L_t(x_t) + lambda * h(x)  over the duplicated coordinates of
a TaskLayout with accelerated proximal gradient. Each replicated group owns
one segment of the duplicated vector, so the penalty prox is the closed-form
per-segment sparse group prox. Setting the penalty mode recovers the lasso
(l1_only, or singleton groups) and the latent overlapping group lasso
(group_only).

Usage:
    layout = replicate_across_tasks(chain_groups(p, 6, 4), T)
    lam_max = lambda_max(problem, layout)
    result = fit(problem, layout, 0.1 * lam_max)
    path = reg_path(problem, layout, default_lambda_grid(lam_max))
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from sklearn.model_selection import KFold

from .errors import DimensionMismatch, InvalidLambdaGrid, TooFewSamples, UncoveredSupport
from .groups import TaskLayout, expand
from .losses import (
    LossKind,
    MultitaskProblem,
    evaluate_loss,
    lipschitz_estimate,
    loss_and_gradient_x,
)
from .metrics import misclassification_rate, mse
from .penalty import PenaltyConfig, dual_norm_bound, penalty_value, prox_full
from .proxgrad import accelerated_prox_grad

logger = logging.getLogger(__name__)


class StepRule(Enum):
    """Step-size policy for the proximal gradient iteration."""
    FIXED_LIPSCHITZ = 'fixed_lipschitz'
    BACKTRACKING = 'backtracking'

    @classmethod
    def parse(cls, name: Union[str, 'StepRule']) -> 'StepRule':
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            raise ValueError(f"Unknown step rule: {name}") from None


@dataclass
class SolverConfig:
    """Solver tolerances and options.

    Attributes:
        max_iters: Cap on proximal steps per fit
        rel_obj_tol: Relative objective change that ends the iteration
        stationarity_tol: Bound on the fixed-point residual, relative to 1 + ||w||
        step_rule: Fixed 1/L step or backtracking
        restart: Reset momentum when the objective would increase
        penalty: Penalty weights and mode
    """
    max_iters: int = 5000
    rel_obj_tol: float = 1e-8
    stationarity_tol: float = 1e-6
    step_rule: StepRule = StepRule.FIXED_LIPSCHITZ
    restart: bool = True
    penalty: PenaltyConfig = field(default_factory=PenaltyConfig)

    def __post_init__(self):
        self.step_rule = StepRule.parse(self.step_rule)
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1: {self.max_iters}")
        if not self.rel_obj_tol > 0:
            raise ValueError(f"rel_obj_tol must be positive: {self.rel_obj_tol}")
        if not self.stationarity_tol > 0:
            raise ValueError(f"stationarity_tol must be positive: {self.stationarity_tol}")

    def to_dict(self):
        return {
            'max_iters': self.max_iters,
            'rel_obj_tol': self.rel_obj_tol,
            'stationarity_tol': self.stationarity_tol,
            'step_rule': self.step_rule.value,
            'restart': self.restart,
            'penalty': self.penalty.to_dict(),
        }


@dataclass
class FitResult:
    """Solution and diagnostics of a single penalized fit.

    Attributes:
        x_hat: p x T coefficient matrix
        w_dup: Duplicated solution (not unique at overlapped coordinates)
        objective_trace: Objective at the start and after every accepted step
        lambda_: Regularization weight used
        stationarity_residual: ||w - prox(w - grad/L, lambda/L)||
        gradient_mapping_norm: stationarity_residual * L
        iterations: Proximal steps taken
        selected_groups: Groups with a nonzero segment
        converged: Both the objective and stationarity tests passed
    """
    x_hat: np.ndarray
    w_dup: np.ndarray
    objective_trace: List[float]
    lambda_: float
    stationarity_residual: float
    gradient_mapping_norm: float
    iterations: int
    selected_groups: List[int]
    converged: bool
    restarts: int = 0

    @property
    def objective(self) -> float:
        return self.objective_trace[-1]

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.x_hat))

    def diagnostics(self):
        return {
            'lambda': self.lambda_,
            'objective': self.objective,
            'stationarity_residual': self.stationarity_residual,
            'gradient_mapping_norm': self.gradient_mapping_norm,
            'iterations': self.iterations,
            'restarts': self.restarts,
            'converged': self.converged,
        }


def _check_problem(problem: MultitaskProblem, layout: TaskLayout) -> None:
    if layout.p != problem.p or layout.T != problem.T:
        raise DimensionMismatch(
            f"layout is {layout.T} tasks x {layout.p} coordinates, "
            f"problem is {problem.T} x {problem.p}")
    if not layout.base.covers_all():
        missing = np.flatnonzero(~layout.base.covered_mask())
        raise UncoveredSupport(
            f"groups leave coordinates uncovered: {missing[:10].tolist()}")


def objective(problem: MultitaskProblem, layout: TaskLayout, w_dup: np.ndarray,
              lam: float, penalty: Optional[PenaltyConfig] = None) -> float:
    """Loss plus lam times the penalty of a duplicated vector."""
    return (evaluate_loss(problem, layout, w_dup).value
            + lam * penalty_value(w_dup, layout.dm, penalty))


def fit(problem: MultitaskProblem, layout: TaskLayout, lam: float,
        cfg: Optional[SolverConfig] = None,
        warm_start: Optional[np.ndarray] = None,
        lipschitz: Optional[float] = None) -> FitResult:
    """Solve the penalized problem at one lambda.

    Non-convergence is reported through FitResult.converged, never raised.

    Args:
        problem: Multitask data
        layout: Replicated group structure
        lam: Regularization weight (>= 0)
        cfg: Solver configuration
        warm_start: Duplicated starting point, zero when omitted
        lipschitz: Loss gradient Lipschitz constant, estimated when omitted

    Raises:
        DimensionMismatch: Problem, layout or warm start disagree
        UncoveredSupport: Some coordinate is in no group
    """
    cfg = cfg or SolverConfig()
    if not lam >= 0:
        raise ValueError(f"lambda must be >= 0: {lam}")
    _check_problem(problem, layout)
    dm = layout.dm
    if warm_start is None:
        w0 = np.zeros(dm.total_dup)
    else:
        w0 = np.asarray(warm_start, dtype=np.float64)
        if w0.shape != (dm.total_dup,):
            raise DimensionMismatch(
                f"warm start must have length {dm.total_dup}, got shape {w0.shape}")

    penalty = cfg.penalty
    L0 = lipschitz if lipschitz is not None else lipschitz_estimate(problem, layout.base_dm)
    backtracking = cfg.step_rule is StepRule.BACKTRACKING
    if backtracking:
        L0 *= 0.1

    def smooth(w):
        ev = evaluate_loss(problem, layout, w)
        return ev.value, ev.grad

    def nonsmooth(w):
        return lam * penalty_value(w, dm, penalty)

    def prox(v, step):
        return prox_full(v, step * lam, dm, penalty)

    def fixed_point_residual(w, L):
        grad = smooth(w)[1]
        return float(np.linalg.norm(w - prox(w - grad / L, 1.0 / L)))

    def certified(w_new, w_old, L):
        return fixed_point_residual(w_new, L) <= cfg.stationarity_tol * (1.0 + float(np.linalg.norm(w_new)))

    result = accelerated_prox_grad(
        smooth, nonsmooth, prox, w0, lipschitz=L0,
        max_iters=cfg.max_iters, rel_obj_tol=cfg.rel_obj_tol, stop=certified,
        restart=cfg.restart, backtracking=backtracking)

    w = result.x
    L = max(result.lipschitz, 1e-12)
    residual = fixed_point_residual(w, L)
    converged = result.converged and residual <= cfg.stationarity_tol * (1.0 + float(np.linalg.norm(w)))
    if not converged:
        logger.warning("fit at lambda=%.4e stopped after %d iterations without "
                       "certification (residual %.3e)", lam, result.iterations, residual)
    else:
        logger.debug("fit at lambda=%.4e converged in %d iterations", lam, result.iterations)

    segment_mass = np.add.reduceat(np.abs(w), dm.offsets[:-1])
    return FitResult(
        x_hat=layout.unstack(expand(dm, w)),
        w_dup=w,
        objective_trace=result.objective_trace,
        lambda_=float(lam),
        stationarity_residual=residual,
        gradient_mapping_norm=residual * L,
        iterations=result.iterations,
        selected_groups=np.flatnonzero(segment_mass > 0).tolist(),
        converged=converged,
        restarts=result.restarts,
    )


def _check_grid(lambdas: Sequence[float]) -> np.ndarray:
    grid = np.asarray(lambdas, dtype=np.float64).ravel()
    if grid.size == 0:
        raise InvalidLambdaGrid("lambda grid is empty")
    if np.any(~np.isfinite(grid)) or np.any(grid < 0):
        raise InvalidLambdaGrid(f"lambdas must be finite and >= 0: {grid.tolist()}")
    return grid


def reg_path(problem: MultitaskProblem, layout: TaskLayout, lambdas: Sequence[float],
             cfg: Optional[SolverConfig] = None) -> List[FitResult]:
    """Fits along a strictly descending lambda grid, each warm-started from the last.

    Raises:
        InvalidLambdaGrid: Grid empty, negative or not strictly descending
    """
    grid = _check_grid(lambdas)
    if np.any(np.diff(grid) >= 0):
        raise InvalidLambdaGrid(f"lambdas must be strictly descending: {grid.tolist()}")
    results = []
    warm = None
    _check_problem(problem, layout)
    L = lipschitz_estimate(problem, layout.base_dm)
    for lam in grid:
        result = fit(problem, layout, float(lam), cfg, warm_start=warm, lipschitz=L)
        results.append(result)
        warm = result.w_dup
    return results


def lambda_max(problem: MultitaskProblem, layout: TaskLayout,
               penalty: Optional[PenaltyConfig] = None) -> float:
    """Smallest lambda at which zero is guaranteed to be a solution."""
    _check_problem(problem, layout)
    _, grad = loss_and_gradient_x(problem, np.zeros((problem.T, problem.p)))
    return dual_norm_bound(grad.reshape(-1), layout.replicated, penalty)


def default_lambda_grid(lam_max: float, count: int = 30, min_ratio: float = 1e-3) -> np.ndarray:
    """count log-spaced values from lam_max down to min_ratio * lam_max."""
    if count < 1:
        raise ValueError(f"count must be >= 1: {count}")
    if not 0.0 < min_ratio < 1.0:
        raise ValueError(f"min_ratio must be in (0, 1): {min_ratio}")
    if lam_max < 0:
        raise InvalidLambdaGrid(f"lambda_max must be >= 0: {lam_max}")
    if lam_max == 0.0 or count == 1:
        return np.array([float(lam_max)])
    return np.geomspace(lam_max, lam_max * min_ratio, count)


def clairvoyant_select(problem: MultitaskProblem, layout: TaskLayout, truth: np.ndarray,
                       lambdas: Sequence[float], cfg: Optional[SolverConfig] = None
                       ) -> Tuple[float, FitResult, List[Tuple[float, float]]]:
    """Pick the lambda whose fit is closest to a known truth.

    Ties go to the larger lambda.

    Returns:
        (best lambda, its fit, [(lambda, mse), ...] in grid order)
    """
    truth = np.asarray(truth, dtype=np.float64)
    if truth.shape != (problem.p, problem.T):
        raise DimensionMismatch(
            f"truth must be {problem.p} x {problem.T}, got shape {truth.shape}")
    path = reg_path(problem, layout, lambdas, cfg)
    table = [(r.lambda_, mse(r.x_hat, truth)) for r in path]
    best = 0
    for i, (_, err) in enumerate(table):
        if err < table[best][1]:
            best = i
    return table[best][0], path[best], table


def _fold_errors(problem: MultitaskProblem, layout: TaskLayout, grid: np.ndarray,
                 cfg: SolverConfig, held_out: List[np.ndarray]) -> np.ndarray:
    train_rows = [np.setdiff1d(np.arange(n), idx) for n, idx in zip(problem.sample_sizes, held_out)]
    train = problem.subset_rows(train_rows)
    test = problem.subset_rows(held_out)
    errors = np.zeros(grid.size)
    for i, result in enumerate(reg_path(train, layout, grid, cfg)):
        scores = test.predict(result.x_hat)
        if problem.loss_kind is LossKind.LOGISTIC:
            labels = np.concatenate(test.responses)
            errors[i] = misclassification_rate(np.concatenate(scores), labels)
        else:
            resid = np.concatenate([s - y for s, y in zip(scores, test.responses)])
            errors[i] = float(resid @ resid) / resid.size
    return errors


def cross_validate(problem: MultitaskProblem, layout: TaskLayout, lambdas: Sequence[float],
                   folds: int = 4, cfg: Optional[SolverConfig] = None, seed: int = 0,
                   threads: int = 1) -> Tuple[float, List[Tuple[float, float]]]:
    """K-fold selection of lambda by held-out error.

    Rows of every task are split by a shuffled KFold seeded with seed
    (folds equal to the sample size is leave-one-out). Folds are fitted in
    parallel and averaged in fold order. Held-out error is the mean squared
    prediction error, or the misclassification rate for the logistic loss.

    Returns:
        (best lambda, [(lambda, mean error), ...] in descending lambda order)

    Raises:
        TooFewSamples: folds < 2 or a task has fewer samples than folds
        InvalidLambdaGrid: Empty, negative or repeated lambdas
    """
    cfg = cfg or SolverConfig()
    if folds < 2:
        raise TooFewSamples(f"folds must be >= 2: {folds}")
    small = [n for n in problem.sample_sizes if n < folds]
    if small:
        raise TooFewSamples(f"every task needs at least {folds} samples: {problem.sample_sizes}")
    grid = _check_grid(lambdas)
    if np.unique(grid).size != grid.size:
        raise InvalidLambdaGrid(f"lambdas must be distinct: {grid.tolist()}")
    grid = np.sort(grid)[::-1]

    kfold = KFold(n_splits=folds, shuffle=True, random_state=seed)
    splits = [[test for _, test in kfold.split(np.arange(n))] for n in problem.sample_sizes]
    fold_rows = [[splits[t][k] for t in range(problem.T)] for k in range(folds)]

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        per_fold = list(pool.map(
            lambda rows: _fold_errors(problem, layout, grid, cfg, rows), fold_rows))
    mean_errors = np.mean(np.stack(per_fold), axis=0)

    table = [(float(lam), float(err)) for lam, err in zip(grid, mean_errors)]
    best = 0
    for i, (_, err) in enumerate(table):
        if err < table[best][1]:
            best = i
    logger.info("cross-validation picked lambda=%.4e (error %.4e)", *table[best])
    return table[best][0], table
