# Property check suites
"""
checks.py - Named property suites run by the `check` command

Suites:
- table:     penalty breakdown of three 10-dimensional golden vectors
- norm:      homogeneity, triangle inequality and definiteness of h
- decompose: h(a + b) = h(a) + h(b) for supports split by the active groups
- dual:      the half-max-group-norm bound dominates the exact dual norm
- compat:    h(x) <= (1 + sqrt(B alpha)) sqrt(k) ||x|| on group-sparse x
- chi2:      maximum of chi-square variables against its tail bound
- lambda:    the lambda rule dominates the dual norm of the noise gradient
- theorem:   squared error at the lambda rule stays under the error bound

Usage:
    report = run_suite('norm', trials=200, seed=1)
    report.passed, report.to_dict()
"""

import logging
from dataclasses import dataclass, field
from math import ceil
from typing import Any, Callable, Dict, Optional

import numpy as np

from soslasso.groups import GroupSet, build_group_set, chain_groups
from soslasso.penalty import PenaltyConfig, dual_norm_bound, eval_overlapping, norm_breakdown

from .bench import BenchConfig, gen_measurements, gen_truth, theory_trial
from .theory import bound_params, check_compatibility, chi2_max_mc, empirical_gradient_dual, lambda_rule
from .trials import map_trials, trial_rng

logger = logging.getLogger(__name__)

REL_TOL = 1e-4

# (1-based support, values) -> (group-norm sum, l1 norm, penalty) over groups {1..5}, {6..10}
GOLDEN_TABLE = [
    (((1, 4, 9), (3, 4, 7)), (12.0, 14.0, 26.0)),
    (((1, 2, 3, 4, 5), (2, 5, 2, 4, 5)), (8.602, 18.0, 26.602)),
    (((1, 3, 4), (3, 4, 7)), (8.602, 14.0, 22.602)),
]


@dataclass
class CheckReport:
    """Outcome of a property suite.

    Attributes:
        suite: Suite name
        passed: Whether every assertion held (within the suite's budget)
        trials: Instances examined
        violations: Instances breaking the property
        observed: Extremes seen during the run
        reference: Analytic values and tolerances the run was held to
        seed: Base seed
    """
    suite: str
    passed: bool
    trials: int
    violations: int
    observed: Dict[str, Any] = field(default_factory=dict)
    reference: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'suite': self.suite,
            'passed': self.passed,
            'trials': self.trials,
            'violations': self.violations,
            'observed': self.observed,
            'reference': self.reference,
            'seed': self.seed,
        }


def _random_chain(rng: np.random.Generator, max_p: int = 30) -> GroupSet:
    """Overlapping chain groups with p <= max_p."""
    B = int(rng.integers(3, 7))
    shift = int(rng.integers(1, B))
    most = (max_p - B) // shift + 1
    count = int(rng.integers(2, min(most, 6) + 1))
    return chain_groups(B + shift * (count - 1), B, shift)


def _sparse_vector(rng: np.random.Generator, p: int) -> np.ndarray:
    x = rng.standard_normal(p)
    x[rng.random(p) < 0.4] = 0.0
    if not np.any(x):
        x[int(rng.integers(p))] = 1.0
    return x


def exact_dual_norm(u: np.ndarray, gs: GroupSet, cfg: Optional[PenaltyConfig] = None,
                    iterations: int = 200) -> float:
    """h*(u) = max_G min { s : ||soft(u_G, s)||_2 <= s alpha_G }, found by bisection."""
    cfg = cfg or PenaltyConfig()
    alphas = cfg.alphas(gs.M)
    best = 0.0
    for g, members in enumerate(gs.groups):
        v = np.abs(np.asarray(u, dtype=np.float64)[list(members)])
        lo, hi = 0.0, float(v.max())
        if hi == 0.0:
            continue
        for _ in range(iterations):
            mid = 0.5 * (lo + hi)
            if np.linalg.norm(np.maximum(v - mid, 0.0)) <= mid * alphas[g]:
                hi = mid
            else:
                lo = mid
        best = max(best, hi)
    return best


def sampled_dual_norm(u: np.ndarray, gs: GroupSet, directions: int,
                      rng: np.random.Generator, cfg: Optional[PenaltyConfig] = None) -> float:
    """Lower estimate of h*(u) from random unit-penalty directions inside each group."""
    cfg = cfg or PenaltyConfig()
    alphas = cfg.alphas(gs.M)
    u = np.asarray(u, dtype=np.float64)
    best = 0.0
    for g, members in enumerate(gs.groups):
        u_g = u[list(members)]
        z = rng.standard_normal((directions, len(members)))
        z[0] = u_g
        # sparse sign patterns reach the l1-dominated corners of the unit ball
        z[1:directions // 2] *= rng.random((max(directions // 2 - 1, 0), len(members))) < 0.5
        h = alphas[g] * np.linalg.norm(z, axis=1) + np.abs(z).sum(axis=1)
        ok = h > 0
        if np.any(ok):
            best = max(best, float(np.max((z[ok] @ u_g) / h[ok])))
    return best


def suite_table(trials: int, seed: int, threads: int) -> CheckReport:
    gs = build_group_set([range(0, 5), range(5, 10)], 10)
    worst = 0.0
    rows = []
    for (support, values), expected in GOLDEN_TABLE:
        x = np.zeros(10)
        x[[i - 1 for i in support]] = values
        got = norm_breakdown(x, gs)
        triple = (got.group_norm_sum, got.l1_norm, got.total)
        worst = max(worst, max(abs(a - b) for a, b in zip(triple, expected)))
        rows.append([round(v, 6) for v in triple])
    violations = int(worst > 1e-3)
    return CheckReport('table', violations == 0, len(GOLDEN_TABLE), violations,
                       {'rows': rows, 'max_abs_error': worst},
                       {'rows': [list(e) for _, e in GOLDEN_TABLE], 'tolerance': 1e-3}, seed)


def suite_norm(trials: int, seed: int, threads: int) -> CheckReport:
    def one(i):
        rng = trial_rng(seed, i)
        gs = _random_chain(rng)
        x, y = _sparse_vector(rng, gs.p), _sparse_vector(rng, gs.p)
        gamma = float(rng.uniform(-3.0, 3.0))
        hx = eval_overlapping(x, gs).value
        hy = eval_overlapping(y, gs).value
        h_scaled = eval_overlapping(gamma * x, gs).value
        h_sum = eval_overlapping(x + y, gs).value
        homog = abs(h_scaled - abs(gamma) * hx) / max(abs(gamma) * hx, 1e-12)
        triangle = (h_sum - hx - hy) / (hx + hy)
        definite = hx > 0 and eval_overlapping(np.zeros(gs.p), gs).value == 0.0
        bad = homog > REL_TOL or triangle > REL_TOL or not definite
        return homog, triangle, bad

    results = map_trials(one, range(trials), threads)
    violations = sum(1 for *_, bad in results if bad)
    return CheckReport('norm', violations == 0, trials, violations,
                       {'max_homogeneity_error': max((r[0] for r in results), default=0.0),
                        'max_triangle_excess': max((r[1] for r in results), default=0.0)},
                       {'relative_tolerance': REL_TOL}, seed)


def suite_decompose(trials: int, seed: int, threads: int) -> CheckReport:
    def one(i):
        rng = trial_rng(seed, i)
        gs = _random_chain(rng)
        counts = gs.multiplicity()
        active = sorted(rng.choice(gs.M, size=int(rng.integers(1, max(gs.M // 2, 1) + 1)),
                                   replace=False).tolist())
        in_active = np.zeros(gs.p, dtype=bool)
        for g in active:
            in_active[list(gs.groups[g])] = True
        private = np.zeros(gs.p, dtype=bool)
        for g in active:
            members = list(gs.groups[g])
            private[members] = counts[members] == 1
        a = np.where(private, rng.standard_normal(gs.p), 0.0)
        b = np.where(~in_active, rng.standard_normal(gs.p), 0.0)
        ha, hb = eval_overlapping(a, gs).value, eval_overlapping(b, gs).value
        hab = eval_overlapping(a + b, gs).value
        total = ha + hb
        gap = abs(hab - total) / total if total > 0 else abs(hab)
        return gap, gap > REL_TOL

    results = map_trials(one, range(trials), threads)
    violations = sum(1 for _, bad in results if bad)
    return CheckReport('decompose', violations == 0, trials, violations,
                       {'max_relative_gap': max((g for g, _ in results), default=0.0)},
                       {'relative_tolerance': REL_TOL}, seed)


def suite_dual(trials: int, seed: int, threads: int) -> CheckReport:
    def one(i):
        rng = trial_rng(seed, i)
        p = int(rng.integers(4, 9))
        count = int(rng.integers(2, 4))
        groups = []
        for _ in range(count):
            size = int(rng.integers(2, p))
            groups.append(rng.choice(p, size=size, replace=False).tolist())
        covered = set().union(*map(set, groups))
        missing = [j for j in range(p) if j not in covered]
        if missing:
            groups[-1] = sorted(set(groups[-1]) | set(missing))
        gs = build_group_set(groups, p)
        u = rng.standard_normal(p)
        bound = dual_norm_bound(u, gs)
        exact = exact_dual_norm(u, gs)
        sampled = sampled_dual_norm(u, gs, 400, rng)
        return bound - max(exact, sampled), max(exact, sampled) > bound + 1e-6

    results = map_trials(one, range(trials), threads)
    violations = sum(1 for _, bad in results if bad)
    return CheckReport('dual', violations == 0, trials, violations,
                       {'min_slack': min((s for s, _ in results), default=0.0)},
                       {'absolute_tolerance': 1e-6}, seed)


def suite_compat(trials: int, seed: int, threads: int) -> CheckReport:
    gs = chain_groups(102, 6, 4)
    reports = []
    for j, (alpha, k) in enumerate([(1.0, 1), (0.5, 3), (0.2, 5)]):
        reports.append(check_compatibility(gs, alpha, k, trials, seed + j, threads=threads))
    violations = sum(r.violations for r in reports)
    return CheckReport('compat', violations == 0, sum(r.trials for r in reports), violations,
                       {'max_ratio': [r.max_ratio for r in reports]},
                       {'bound': [r.bound for r in reports],
                        'alpha_k': [[1.0, 1], [0.5, 3], [0.2, 5]]}, seed)


def suite_chi2(trials: int, seed: int, threads: int) -> CheckReport:
    count = max(trials, 10000)
    cases = [(500, 120, 1.5), (2, 1, 2.0)]
    reports = map_trials(lambda case: chi2_max_mc(*case, trials=count, seed=seed), cases, threads)
    violations = sum(1 for r in reports if not r.passed)
    return CheckReport('chi2', violations == 0, count * len(cases), violations,
                       {'empirical': [r.empirical for r in reports],
                        'stderr': [r.stderr for r in reports]},
                       {'cases': [list(c) for c in cases],
                        'analytic_bound': [r.analytic_bound for r in reports]}, seed)


def _theory_config(**overrides) -> BenchConfig:
    return BenchConfig.from_profile('desk', design_scale=1.0, **overrides)


def suite_lambda(trials: int, seed: int, threads: int) -> CheckReport:
    cfg = BenchConfig(sigma=0.1, design_scale=1.0, seed=seed)
    rng = trial_rng(seed, 0)
    truth = gen_truth(cfg, rng)
    problem = gen_measurements(truth.matrix, cfg, rng)
    layout = cfg.layout()
    params = bound_params(problem, layout, cfg.k_active, cfg.alpha, cfg.sigma)
    rule = lambda_rule(params)
    draws = empirical_gradient_dual(problem, layout, max(trials, 1000), seed + 1)
    p99 = float(np.quantile(draws, 0.99))
    violations = int(np.count_nonzero(draws > rule))
    passed = rule >= p99
    return CheckReport('lambda', passed, draws.size, violations,
                       {'p99_dual_norm': p99, 'max_dual_norm': float(draws.max())},
                       {'lambda_rule': rule, 'sigma_m': params.sigma_m}, seed)


def suite_theorem(trials: int, seed: int, threads: int) -> CheckReport:
    cfg = _theory_config(seed=seed)
    outcomes = map_trials(lambda i: theory_trial(cfg, trial_rng(seed, i)), range(trials), threads)
    evaluated = [(e, b) for e, b, _ in outcomes if np.isfinite(b)]
    violations = sum(1 for e, b in evaluated if e > b)
    skipped = len(outcomes) - len(evaluated)
    budget = int(ceil(0.01 * len(evaluated)))
    if skipped:
        logger.warning("%d trials skipped: singular restricted design", skipped)
    return CheckReport('theorem', violations <= budget and evaluated != [], trials, violations,
                       {'max_error_to_bound': max((e / b for e, b in evaluated), default=0.0),
                        'skipped_singular': skipped},
                       {'violation_budget': budget, 'profile': 'desk', 'design_scale': 1.0}, seed)


SUITES: Dict[str, Callable[[int, int, int], CheckReport]] = {
    'table': suite_table,
    'norm': suite_norm,
    'decompose': suite_decompose,
    'dual': suite_dual,
    'compat': suite_compat,
    'chi2': suite_chi2,
    'lambda': suite_lambda,
    'theorem': suite_theorem,
}


def run_suite(name: str, trials: int = 100, seed: int = 0, threads: int = 1) -> CheckReport:
    """Run a named suite.

    Raises:
        ValueError: Unknown suite or trials < 1
    """
    if name not in SUITES:
        raise ValueError(f"Unknown suite: {name} (choose from {sorted(SUITES)})")
    if trials < 1:
        raise ValueError(f"trials must be >= 1: {trials}")
    report = SUITES[name](trials, seed, threads)
    log = logger.info if report.passed else logger.warning
    log("suite %s: %s (%d violations in %d trials)",
        name, 'passed' if report.passed else 'FAILED', report.violations, report.trials)
    return report
