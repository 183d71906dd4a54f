# Experiment Harness
"""
experiments - Synthetic benchmarks and theory checks built on soslasso.

This module provides:
- BenchConfig / run_sweep / scaling_study: planted-signal method comparison
- gen_truth / gen_measurements: synthetic multitask data
- BoundParams / lambda_rule / theorem_bound: error analysis quantities
- run_suite: named property suites behind the `check` command

Usage:
    from experiments import BenchConfig, run_sweep, run_suite

    report = run_sweep(BenchConfig.from_profile('desk'), 'noise')
    check = run_suite('norm', trials=200, seed=1)
"""

from .trials import trial_rng, map_trials, resolve_threads
from .theory import (
    BoundParams,
    CompatibilityReport,
    RSCEstimate,
    Chi2Report,
    compatibility_bound,
    check_compatibility,
    estimate_rsc,
    chi2_max_mc,
    lambda_rule,
    theorem_bound,
    bound_params,
    empirical_gradient_dual,
)
from .bench import (
    METHODS,
    SweepKind,
    BenchConfig,
    BenchReport,
    Truth,
    TrialRecord,
    ScalingReport,
    gen_truth,
    gen_measurements,
    run_sweep,
    scaling_study,
)
from .checks import SUITES, CheckReport, run_suite

__all__ = [
    # Trials
    'trial_rng', 'map_trials', 'resolve_threads',
    # Theory
    'BoundParams', 'CompatibilityReport', 'RSCEstimate', 'Chi2Report',
    'compatibility_bound', 'check_compatibility', 'estimate_rsc', 'chi2_max_mc',
    'lambda_rule', 'theorem_bound', 'bound_params', 'empirical_gradient_dual',
    # Bench
    'METHODS', 'SweepKind', 'BenchConfig', 'BenchReport', 'Truth', 'TrialRecord',
    'ScalingReport', 'gen_truth', 'gen_measurements', 'run_sweep', 'scaling_study',
    # Checks
    'SUITES', 'CheckReport', 'run_suite',
]
