# SOSlasso Core Library
"""
soslasso - Sparse overlapping sets lasso for multitask regression.

This package provides the estimation pipeline:
- GroupSet / DuplicationMap / TaskLayout: overlapping groups and covariate duplication
- PenaltyConfig: norm evaluation, dual bound and proximal operator
- MultitaskProblem: squared and logistic multitask losses
- fit / reg_path / cross_validate: accelerated proximal gradient solver
- mse / misclassification_rate: error metrics

Usage:
    from soslasso import chain_groups, replicate_across_tasks, fit, lambda_max

    layout = replicate_across_tasks(chain_groups(p=14, B=6, shift=4), T=2)
    lam = 0.1 * lambda_max(problem, layout)
    result = fit(problem, layout, lam)
"""

from .errors import (
    SOSLassoError,
    IndexOutOfRange,
    EmptyGroup,
    DuplicateWithinGroup,
    GeometryMismatch,
    DimensionMismatch,
    ShapeMismatch,
    OverlappingGroups,
    UncoveredSupport,
    BadLabels,
    UnequalSampleSizes,
    TooFewSamples,
    InvalidLambdaGrid,
    GeneratorInfeasible,
    NonpositiveKappa,
    InputError,
    NoConvergence,
)
from .groups import (
    GroupSet,
    DuplicationMap,
    TaskLayout,
    build_group_set,
    chain_groups,
    singleton_groups,
    grid_groups,
    duplication_map,
    expand,
    restrict,
    even_split,
    lift_design,
    replicate_across_tasks,
)
from .penalty import (
    PenaltyMode,
    PenaltyConfig,
    Decomposition,
    NormBreakdown,
    prox_group,
    prox_full,
    penalty_value,
    norm_breakdown,
    eval_disjoint,
    eval_overlapping,
    dual_norm_bound,
)
from .losses import (
    LossKind,
    MultitaskProblem,
    LossEval,
    squared_loss,
    logistic_loss,
    evaluate_loss,
    lipschitz_estimate,
    max_group_singular,
)
from .solver import (
    StepRule,
    SolverConfig,
    FitResult,
    fit,
    reg_path,
    lambda_max,
    default_lambda_grid,
    objective,
    clairvoyant_select,
    cross_validate,
)
from .metrics import mse, support_overlap_fraction, misclassification_rate

__all__ = [
    # Errors
    'SOSLassoError', 'IndexOutOfRange', 'EmptyGroup', 'DuplicateWithinGroup',
    'GeometryMismatch', 'DimensionMismatch', 'ShapeMismatch', 'OverlappingGroups',
    'UncoveredSupport', 'BadLabels', 'UnequalSampleSizes', 'TooFewSamples',
    'InvalidLambdaGrid', 'GeneratorInfeasible', 'NonpositiveKappa', 'InputError',
    'NoConvergence',
    # Groups
    'GroupSet', 'DuplicationMap', 'TaskLayout', 'build_group_set', 'chain_groups',
    'singleton_groups', 'grid_groups', 'duplication_map', 'expand', 'restrict',
    'even_split', 'lift_design', 'replicate_across_tasks',
    # Penalty
    'PenaltyMode', 'PenaltyConfig', 'Decomposition', 'NormBreakdown', 'prox_group',
    'prox_full', 'penalty_value', 'norm_breakdown', 'eval_disjoint',
    'eval_overlapping', 'dual_norm_bound',
    # Losses
    'LossKind', 'MultitaskProblem', 'LossEval', 'squared_loss', 'logistic_loss',
    'evaluate_loss', 'lipschitz_estimate', 'max_group_singular',
    # Solver
    'StepRule', 'SolverConfig', 'FitResult', 'fit', 'reg_path', 'lambda_max',
    'default_lambda_grid', 'objective', 'clairvoyant_select', 'cross_validate',
    # Metrics
    'mse', 'support_overlap_fraction', 'misclassification_rate',
]
