# Theory verification harness
"""
theory.py - Empirical checks of the SOSlasso error analysis

Covers the compatibility constant of the norm, the restricted strong
convexity constant of the squared loss, the tail of the maximum of
chi-square variables, the lambda selection rule and the final error bound
for multitask regression.

The restricted constant is computed on the linear span of the planted
support (a restricted minimum eigenvalue) rather than over the cone of
error directions used in the proofs; reports carry that caveat.

Usage:
    params = BoundParams(M=100, B=6, T=5, n=80, k=8, alpha=0.2,
                         sigma=0.1, sigma_m=1.8, kappa=0.05)
    lam = lambda_rule(params)
    bound = theorem_bound(params)
"""

import logging
from dataclasses import asdict, dataclass
from math import ceil, exp, log, sqrt
from typing import List, Optional, Sequence

import numpy as np
from scipy.linalg import eigvalsh

from soslasso.errors import GeneratorInfeasible, NonpositiveKappa
from soslasso.groups import GroupSet, TaskLayout
from soslasso.losses import LossKind, MultitaskProblem, max_group_singular
from soslasso.penalty import PenaltyConfig, dual_norm_bound, eval_overlapping

from .trials import map_trials, trial_rng

logger = logging.getLogger(__name__)

RSC_CAVEAT = ("kappa is the minimum restricted eigenvalue on the span of the active "
              "groups, not the constant over the cone of admissible error directions")


@dataclass
class BoundParams:
    """Quantities entering the lambda rule and the error bound.

    Attributes:
        M: Number of groups
        B: Largest group size
        T: Number of tasks
        n: Samples per task
        k: Number of active groups
        alpha: Fraction of nonzeros inside an active group
        sigma: Noise standard deviation
        sigma_m: Largest group singular value of the design
        kappa: Restricted strong convexity constant, None if not estimated
    """
    M: int
    B: int
    T: int
    n: int
    k: int
    alpha: float
    sigma: float
    sigma_m: float
    kappa: Optional[float] = None

    def __post_init__(self):
        if self.M < 1 or self.B < 1 or self.T < 1 or self.n < 1:
            raise ValueError(
                f"M, B, T and n must be >= 1: M={self.M}, B={self.B}, T={self.T}, n={self.n}")
        if not 1 <= self.k <= self.M:
            raise ValueError(f"k must be in [1, {self.M}]: {self.k}")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1]: {self.alpha}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0: {self.sigma}")
        if self.sigma_m < 0:
            raise ValueError(f"sigma_m must be >= 0: {self.sigma_m}")

    def to_dict(self):
        return asdict(self)


@dataclass
class CompatibilityReport:
    """Largest observed h(x) / ||x|| against the compatibility bound."""
    trials: int
    violations: int
    max_ratio: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.violations == 0


@dataclass
class RSCEstimate:
    """Restricted curvature of the squared loss on a support.

    Attributes:
        kappa: Estimated constant, 0.0 when the restriction is singular
        singular: Restricted design is rank deficient
        sampled_kappa: Smallest ratio over random directions (>= kappa)
        caveat: How kappa relates to the constant in the analysis
    """
    kappa: float
    singular: bool
    sampled_kappa: Optional[float] = None
    caveat: str = RSC_CAVEAT


@dataclass
class Chi2Report:
    """Monte-Carlo probability that the maximum of M chi-square(d) stays below c^2 d."""
    M: int
    d: int
    c: float
    trials: int
    empirical: float
    stderr: float
    analytic_bound: float

    @property
    def passed(self) -> bool:
        return self.empirical >= self.analytic_bound - 3.0 * self.stderr


def compatibility_bound(B: int, alpha: float, k: int) -> float:
    """(1 + sqrt(B alpha)) sqrt(k)."""
    if B < 1 or k < 1:
        raise ValueError(f"B and k must be >= 1: B={B}, k={k}")
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must be in (0, 1]: {alpha}")
    return (1.0 + sqrt(B * alpha)) * sqrt(k)


def _disjoint_active_groups(gs: GroupSet, k: int, rng: np.random.Generator,
                            attempts: int = 50) -> List[int]:
    for _ in range(attempts):
        chosen = []
        used = set()
        for g in rng.permutation(gs.M):
            members = set(gs.groups[g])
            if members & used:
                continue
            chosen.append(int(g))
            used |= members
            if len(chosen) == k:
                return sorted(chosen)
    raise GeneratorInfeasible(f"could not place {k} pairwise disjoint groups among {gs.M}")


def sample_sparse_signal(gs: GroupSet, alpha: float, k: int,
                         rng: np.random.Generator) -> np.ndarray:
    """x with k pairwise disjoint active groups and ceil(alpha |G|) nonzeros in each.

    Raises:
        GeneratorInfeasible: k disjoint groups cannot be found
    """
    if not 1 <= k <= gs.M:
        raise GeneratorInfeasible(f"k must be in [1, {gs.M}]: {k}")
    x = np.zeros(gs.p)
    for g in _disjoint_active_groups(gs, k, rng):
        members = np.asarray(gs.groups[g])
        count = int(ceil(alpha * members.size - 1e-9))
        picked = rng.choice(members, size=max(count, 1), replace=False)
        x[picked] = rng.standard_normal(picked.size)
    return x


def check_compatibility(gs: GroupSet, alpha: float, k: int, trials: int, seed: int,
                        cfg: Optional[PenaltyConfig] = None, threads: int = 1
                        ) -> CompatibilityReport:
    """Check h(x) <= (1 + sqrt(B alpha)) sqrt(k) ||x|| on random group-sparse x.

    Raises:
        GeneratorInfeasible: k disjoint groups cannot be found
    """
    bound = compatibility_bound(gs.B, alpha, k)

    def one(i):
        x = sample_sparse_signal(gs, alpha, k, trial_rng(seed, i))
        norm = float(np.linalg.norm(x))
        value = eval_overlapping(x, gs, cfg).value
        return value / norm, value > bound * norm + 1e-6

    results = map_trials(one, range(trials), threads)
    ratios = [r for r, _ in results]
    violations = sum(1 for _, bad in results if bad)
    if violations:
        logger.warning("compatibility bound violated in %d of %d trials", violations, trials)
    return CompatibilityReport(trials, violations, max(ratios, default=0.0), bound)


def estimate_rsc(problem: MultitaskProblem, layout: TaskLayout, support: Sequence[int],
                 trials: int = 0, seed: int = 0) -> RSCEstimate:
    """Restricted strong convexity constant of the squared loss on a support.

    kappa = min_t lambda_min(Phi_tS^T Phi_tS) / (2n), the tightest constant
    with (1/2n) sum_t ||Phi_t D_t||^2 >= kappa ||D||^2 for D supported on S in
    every task. With trials > 0 random directions on S are also sampled.

    Args:
        problem: Squared-loss problem with a common sample size
        layout: Task layout of the problem
        support: Per-task coordinates (typically the union of active groups)
        trials: Random directions to sample
        seed: Seed for the sampled directions

    Raises:
        UnequalSampleSizes: Tasks differ in sample count
    """
    if problem.loss_kind is not LossKind.SQUARED:
        raise ValueError(f"RSC estimate needs a squared loss, got {problem.loss_kind.value}")
    n = problem.common_n()
    cols = np.unique(np.asarray(support, dtype=np.int64))
    if cols.size == 0:
        raise ValueError("support is empty")
    if cols[0] < 0 or cols[-1] >= layout.p:
        raise ValueError(f"support indices must lie in [0, {layout.p})")

    smallest, largest = np.inf, 0.0
    for design in problem.designs:
        sub = design[:, cols]
        eigs = eigvalsh(sub.T @ sub)
        smallest = min(smallest, float(eigs[0]))
        largest = max(largest, float(eigs[-1]))
    kappa = smallest / (2.0 * n)
    singular = smallest <= 1e-12 * max(largest, 1.0)
    if singular:
        logger.warning("restricted design is singular on %d coordinates; kappa set to 0",
                       cols.size)
        kappa = 0.0

    sampled = None
    if trials > 0:
        rng = trial_rng(seed, 0)
        best = np.inf
        for _ in range(trials):
            directions = rng.standard_normal((problem.T, cols.size))
            num = sum(float(np.sum((d[:, cols] @ v) ** 2))
                      for d, v in zip(problem.designs, directions))
            best = min(best, num / (2.0 * n * float(np.sum(directions ** 2))))
        sampled = best
    return RSCEstimate(kappa, singular, sampled)


def chi2_max_mc(M: int, d: int, c: float, trials: int, seed: int,
                chunk: int = 1000) -> Chi2Report:
    """Monte-Carlo Pr(max of M chi-square(d) <= c^2 d) with its analytic lower bound.

    The bound is 1 - exp(log M - (c - 1)^2 d / 2), clipped at 0.
    """
    if M < 1 or d < 1:
        raise ValueError(f"M and d must be >= 1: M={M}, d={d}")
    if not c > 1.0:
        raise ValueError(f"c must be > 1: {c}")
    if trials < 1000:
        raise ValueError(f"trials must be >= 1000: {trials}")
    rng = trial_rng(seed, M, d)
    threshold = c * c * d
    hits = 0
    remaining = trials
    while remaining > 0:
        size = min(chunk, remaining)
        draws = rng.chisquare(d, size=(size, M))
        hits += int(np.count_nonzero(draws.max(axis=1) <= threshold))
        remaining -= size
    p_hat = hits / trials
    stderr = sqrt(p_hat * (1.0 - p_hat) / trials)
    analytic = max(0.0, 1.0 - exp(log(M) - (c - 1.0) ** 2 * d / 2.0))
    return Chi2Report(M, d, c, trials, p_hat, stderr, analytic)


def lambda_rule(params: BoundParams) -> float:
    """Smallest lambda meeting the error-bound premise: sigma sigma_m sqrt((log M + TB)/n) / 2."""
    return params.sigma * params.sigma_m * sqrt(
        (log(params.M) + params.T * params.B) / params.n) / 2.0


def theorem_bound(params: BoundParams) -> float:
    """(9/4) sigma^2 sigma_m^2 (1 + sqrt(TB alpha))^2 k (log M + TB) / (n kappa).

    Raises:
        NonpositiveKappa: kappa missing or <= 0
    """
    if params.kappa is None or not params.kappa > 0:
        raise NonpositiveKappa(f"kappa must be positive: {params.kappa}")
    p = params
    return (2.25 * p.sigma ** 2 * p.sigma_m ** 2
            * (1.0 + sqrt(p.T * p.B * p.alpha)) ** 2
            * p.k * (log(p.M) + p.T * p.B) / (p.n * p.kappa))


def gram_sigma_m(problem: MultitaskProblem, layout: TaskLayout) -> float:
    """Largest group singular value of the per-sample Gram matrix Phi_G^T Phi_G / n.

    This is the scale at which the lambda rule and the error bound are
    stated for the 1/(2n) squared loss on unit-variance designs.
    """
    return max_group_singular(problem, layout) / problem.common_n()


def bound_params(problem: MultitaskProblem, layout: TaskLayout, k: int, alpha: float,
                 sigma: float, kappa: Optional[float] = None) -> BoundParams:
    """BoundParams for a generated instance, sigma_m on the per-sample Gram scale."""
    return BoundParams(M=layout.M, B=layout.base.B, T=layout.T, n=problem.common_n(),
                       k=k, alpha=alpha, sigma=sigma,
                       sigma_m=gram_sigma_m(problem, layout), kappa=kappa)


def empirical_gradient_dual(problem: MultitaskProblem, layout: TaskLayout, draws: int,
                            seed: int, sigma: Optional[float] = None) -> np.ndarray:
    """Draws of dual_norm_bound((1/n) Phi^T eta) under fresh Gaussian noise.

    This is the dual bound of the squared-loss gradient at the true
    coefficients, whatever those are.
    """
    sigma = problem.noise_sigma if sigma is None else sigma
    if sigma is None or sigma < 0:
        raise ValueError(f"noise level must be known and >= 0: {sigma}")
    values = np.empty(draws)
    for i in range(draws):
        rng = trial_rng(seed, i)
        grad = np.concatenate([
            design.T @ (sigma * rng.standard_normal(design.shape[0])) / design.shape[0]
            for design in problem.designs])
        values[i] = dual_norm_bound(grad, layout.replicated)
    return values
