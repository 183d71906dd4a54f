# Synthetic multitask benchmark
"""
bench.py - Planted-signal generator and the lasso / latent group lasso / SOSlasso comparison

Signals live on a chain of overlapping groups replicated across tasks. A
few groups are activated, filled with uniform coefficients, and only the
largest-magnitude fraction alpha of each active multitask group is kept.
Measurements are Gaussian with variance design_scale per entry plus white
noise. Each method picks its lambda clairvoyantly (minimum MSE against the
planted truth) on its own grid.

Profiles:
- paper: p=2002, B=6, shift=4 (M=500), T=20, n=250, k=20
- desk:  p=402,  B=6, shift=4 (M=100), T=5,  n=80,  k=8, 20 trials

Usage:
    cfg = BenchConfig.from_profile('desk', trials=5)
    report = run_sweep(cfg, SweepKind.NOISE, [0.05, 0.1], ['lasso', 'soslasso'])
    for cell in report.cells():
        print(cell['method'], cell['sweep_value'], cell['mean_mse'])
"""

import hashlib
import json
import logging
import time
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from math import ceil
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from soslasso.errors import GeneratorInfeasible, SOSLassoError
from soslasso.groups import TaskLayout, chain_groups, replicate_across_tasks, singleton_groups
from soslasso.losses import LossKind, MultitaskProblem
from soslasso.metrics import mse
from soslasso.penalty import PenaltyConfig, PenaltyMode
from soslasso.solver import SolverConfig, clairvoyant_select, default_lambda_grid, fit, lambda_max

from .theory import bound_params, estimate_rsc, lambda_rule, theorem_bound
from .trials import map_trials, trial_rng

logger = logging.getLogger(__name__)

METHODS = ('lasso', 'glasso_latent', 'soslasso')

NOISE_GRID = (0.01, 0.05, 0.1, 0.2, 0.5)
ALPHA_GRID = (0.1, 0.2, 0.4, 0.6, 0.8, 1.0)

Seed = Union[int, np.random.Generator]


class SweepKind(Enum):
    """Parameter varied across a sweep."""
    NOISE = 'noise'
    ALPHA = 'alpha'

    @classmethod
    def parse(cls, name: Union[str, 'SweepKind']) -> 'SweepKind':
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            raise ValueError(f"Unknown sweep kind: {name}") from None

    @property
    def default_values(self) -> Tuple[float, ...]:
        return NOISE_GRID if self is SweepKind.NOISE else ALPHA_GRID


@dataclass
class BenchConfig:
    """Synthetic experiment parameters.

    Attributes:
        p: Coefficients per task
        B: Group size
        shift: Start spacing of the chain groups
        T: Tasks
        n: Samples per task
        k_active: Active groups
        alpha: Fraction of each active multitask group kept
        sigma: Noise standard deviation
        coeff_low: Lower end of the uniform coefficient draw
        coeff_high: Upper end of the uniform coefficient draw
        design_scale: Variance of design entries, None for 1/n
        lambda_count: Points on each method's lambda grid
        lambda_min_ratio: Smallest lambda as a fraction of lambda_max
        trials: Trials per sweep point
        seed: Base seed
    """
    p: int = 2002
    B: int = 6
    shift: int = 4
    T: int = 20
    n: int = 250
    k_active: int = 20
    alpha: float = 0.2
    sigma: float = 0.1
    coeff_low: float = -1.0
    coeff_high: float = 1.0
    design_scale: Optional[float] = None
    lambda_count: int = 30
    lambda_min_ratio: float = 1e-3
    trials: int = 20
    seed: int = 0

    PROFILES = {
        'paper': {'p': 2002, 'B': 6, 'shift': 4, 'T': 20, 'n': 250, 'k_active': 20},
        'desk': {'p': 402, 'B': 6, 'shift': 4, 'T': 5, 'n': 80, 'k_active': 8, 'trials': 20},
    }

    def __post_init__(self):
        chain_groups(self.p, self.B, self.shift)
        if self.T < 1 or self.n < 1:
            raise ValueError(f"T and n must be >= 1: T={self.T}, n={self.n}")
        if not 0 <= self.k_active <= self.M:
            raise GeneratorInfeasible(f"k_active must be in [0, {self.M}]: {self.k_active}")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1]: {self.alpha}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0: {self.sigma}")
        if not self.coeff_low < self.coeff_high:
            raise ValueError(f"coeff_low must be below coeff_high: {self.coeff_low}, {self.coeff_high}")
        if self.design_scale is not None and not self.design_scale > 0:
            raise ValueError(f"design_scale must be positive: {self.design_scale}")
        if self.lambda_count < 1:
            raise ValueError(f"lambda_count must be >= 1: {self.lambda_count}")
        if not 0.0 < self.lambda_min_ratio < 1.0:
            raise ValueError(f"lambda_min_ratio must be in (0, 1): {self.lambda_min_ratio}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1: {self.trials}")

    @classmethod
    def from_profile(cls, name: str, **overrides) -> 'BenchConfig':
        """Profile defaults with explicit overrides (None values ignored).

        Unless k_active is given, the profile's k_active is capped at the
        group count of the resulting geometry.
        """
        if name not in cls.PROFILES:
            raise ValueError(f"Unknown profile: {name} (choose from {sorted(cls.PROFILES)})")
        values = dict(cls.PROFILES[name])
        overrides = {k: v for k, v in overrides.items() if v is not None}
        values.update(overrides)
        if 'k_active' not in overrides and values['p'] >= values['B'] and values['shift'] > 0:
            groups = (values['p'] - values['B']) // values['shift'] + 1
            values['k_active'] = min(values['k_active'], groups)
        return cls(**values)

    @property
    def M(self) -> int:
        return (self.p - self.B) // self.shift + 1

    @property
    def variance(self) -> float:
        return self.design_scale if self.design_scale is not None else 1.0 / self.n

    def layout(self) -> TaskLayout:
        return replicate_across_tasks(chain_groups(self.p, self.B, self.shift), self.T)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def config_hash(self, extra: Optional[Dict[str, Any]] = None) -> str:
        """Stable SHA-256 of the configuration and any extra run parameters."""
        payload = {'config': self.to_dict(), 'extra': extra or {}}
        text = json.dumps(payload, sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(text.encode('utf-8')).hexdigest()


@dataclass
class Truth:
    """Planted p x T coefficients and the active group indices."""
    matrix: np.ndarray
    active_groups: List[int]


def _rng(seed: Seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def gen_truth(cfg: BenchConfig, seed: Seed) -> Truth:
    """Planted multitask signal.

    Active groups are filled in ascending order, so where two active groups
    overlap the later one overwrites only the entries it retains.
    """
    rng = _rng(seed)
    gs = chain_groups(cfg.p, cfg.B, cfg.shift)
    matrix = np.zeros((cfg.p, cfg.T))
    if cfg.k_active == 0:
        return Truth(matrix, [])
    active = sorted(int(g) for g in rng.choice(gs.M, size=cfg.k_active, replace=False))
    for g in active:
        rows = np.asarray(gs.groups[g])
        values = rng.uniform(cfg.coeff_low, cfg.coeff_high, size=(rows.size, cfg.T))
        keep = int(ceil(cfg.alpha * values.size - 1e-9))
        flat = values.ravel()
        # largest magnitude first, ties to the lower (row, task) index
        order = np.lexsort((np.arange(flat.size), -np.abs(flat)))[:keep]
        r, t = np.unravel_index(order, values.shape)
        matrix[rows[r], t] = flat[order]
    return Truth(matrix, active)


def gen_measurements(truth: np.ndarray, cfg: BenchConfig, seed: Seed) -> MultitaskProblem:
    """Gaussian designs with variance design_scale and noisy responses per task."""
    truth = np.asarray(truth, dtype=np.float64)
    if truth.shape != (cfg.p, cfg.T):
        raise ValueError(f"truth must be {cfg.p} x {cfg.T}: {truth.shape}")
    rng = _rng(seed)
    scale = np.sqrt(cfg.variance)
    designs, responses = [], []
    for t in range(cfg.T):
        design = scale * rng.standard_normal((cfg.n, cfg.p))
        y = design @ truth[:, t]
        if cfg.sigma > 0:
            y = y + cfg.sigma * rng.standard_normal(cfg.n)
        designs.append(design)
        responses.append(y)
    return MultitaskProblem(designs, responses, LossKind.SQUARED, noise_sigma=cfg.sigma)


def method_setup(method: str, cfg: BenchConfig) -> Tuple[TaskLayout, PenaltyConfig]:
    """Group layout and penalty for a named method."""
    if method == 'lasso':
        return (replicate_across_tasks(singleton_groups(cfg.p), cfg.T),
                PenaltyConfig(mode=PenaltyMode.L1_ONLY))
    if method == 'glasso_latent':
        return cfg.layout(), PenaltyConfig(mode=PenaltyMode.GROUP_ONLY)
    if method == 'soslasso':
        return cfg.layout(), PenaltyConfig(mode=PenaltyMode.SOSLASSO)
    raise ValueError(f"Unknown method: {method} (choose from {list(METHODS)})")


@dataclass
class TrialRecord:
    """Outcome of one method on one trial."""
    sweep_value: float
    method: str
    trial: int
    lambda_selected: float
    mse: float
    converged: bool = True
    error: Optional[str] = None


@dataclass
class BenchReport:
    """Per-trial records plus aggregation over trials.

    wall_time is informational and kept out of every exported file.
    """
    config: BenchConfig
    sweep: SweepKind
    sweep_values: List[float]
    methods: List[str]
    records: List[TrialRecord] = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def config_hash(self) -> str:
        return self.config.config_hash({
            'sweep': self.sweep.value,
            'sweep_values': list(self.sweep_values),
            'methods': list(self.methods),
        })

    def cells(self) -> List[Dict[str, Any]]:
        """Mean and standard error of the MSE per (sweep value, method), in sweep order."""
        out = []
        for value in self.sweep_values:
            for method in self.methods:
                rows = [r for r in self.records if r.sweep_value == value and r.method == method]
                errors = np.array([r.mse for r in rows if r.error is None])
                count = errors.size
                mean = float(errors.mean()) if count else float('nan')
                stderr = float(errors.std(ddof=1) / np.sqrt(count)) if count > 1 else 0.0
                out.append({
                    'sweep_value': value,
                    'method': method,
                    'trials': len(rows),
                    'failures': sum(1 for r in rows if r.error is not None),
                    'unconverged': sum(1 for r in rows if not r.converged),
                    'mean_mse': mean,
                    'stderr_mse': stderr,
                    'lambdas': [r.lambda_selected for r in rows],
                })
        return out

    def cell(self, method: str, sweep_value: float) -> Dict[str, Any]:
        for c in self.cells():
            if c['method'] == method and c['sweep_value'] == sweep_value:
                return c
        raise KeyError(f"no cell for {method} at {sweep_value}")

    def summary(self) -> Dict[str, Any]:
        """JSON-ready aggregate, free of timing information."""
        return {
            'config': self.config.to_dict(),
            'config_hash': self.config_hash,
            'sweep': self.sweep.value,
            'sweep_values': list(self.sweep_values),
            'methods': list(self.methods),
            'seed': self.config.seed,
            'trials': self.config.trials,
            'cells': self.cells(),
        }


def _run_method(method: str, cfg: BenchConfig, problem: MultitaskProblem, truth: Truth,
                solver: SolverConfig) -> Tuple[float, float, bool]:
    layout, penalty = method_setup(method, cfg)
    solver = replace(solver, penalty=penalty)
    grid = default_lambda_grid(lambda_max(problem, layout, penalty),
                               cfg.lambda_count, cfg.lambda_min_ratio)
    lam, best, _ = clairvoyant_select(problem, layout, truth.matrix, grid, solver)
    return lam, mse(best.x_hat, truth.matrix), best.converged


def _sweep_config(cfg: BenchConfig, sweep: SweepKind, value: float) -> BenchConfig:
    if sweep is SweepKind.NOISE:
        return replace(cfg, sigma=float(value))
    return replace(cfg, alpha=float(value))


def run_sweep(cfg: BenchConfig, sweep: Union[str, SweepKind],
              values: Optional[Sequence[float]] = None,
              methods: Sequence[str] = METHODS,
              solver: Optional[SolverConfig] = None, threads: int = 1) -> BenchReport:
    """Compare methods over a noise or alpha sweep.

    Each (sweep point, trial) draws a fresh truth and fresh designs from the
    stream keyed by (seed, sweep index, trial index). Solver failures are
    recorded on their cell and do not stop the sweep.
    """
    sweep = SweepKind.parse(sweep)
    values = list(sweep.default_values if values is None else values)
    methods = list(methods)
    if not methods:
        raise ValueError("methods must not be empty")
    for method in methods:
        method_setup(method, cfg)
    if not values:
        raise ValueError("sweep values must not be empty")
    solver = solver or SolverConfig()
    configs = [_sweep_config(cfg, sweep, v) for v in values]

    def one(key):
        i, j = key
        cfg_i = configs[i]
        rng = trial_rng(cfg.seed, i, j)
        truth = gen_truth(cfg_i, rng)
        problem = gen_measurements(truth.matrix, cfg_i, rng)
        records = []
        for method in methods:
            try:
                lam, err, converged = _run_method(method, cfg_i, problem, truth, solver)
                records.append(TrialRecord(values[i], method, j, lam, err, converged))
            except (SOSLassoError, ArithmeticError, np.linalg.LinAlgError) as exc:
                logger.warning("%s failed at %s=%s trial %d: %s",
                               method, sweep.value, values[i], j, exc)
                records.append(TrialRecord(values[i], method, j, float('nan'),
                                           float('nan'), False, str(exc)))
        return records

    keys = [(i, j) for i in range(len(values)) for j in range(cfg.trials)]
    start = time.perf_counter()
    per_unit = map_trials(one, keys, threads)
    report = BenchReport(cfg, sweep, values, methods,
                         [r for unit in per_unit for r in unit])
    report.wall_time = time.perf_counter() - start
    logger.info("%s sweep: %d points x %d trials x %d methods in %.1f s",
                sweep.value, len(values), cfg.trials, len(methods), report.wall_time)
    return report


@dataclass
class ScalingRow:
    """Squared error and error bound at one sample size."""
    n: int
    mean_error: float
    mean_bound: float
    errors: List[float]
    bounds: List[float]
    lambdas: List[float]

    @property
    def dominated(self) -> int:
        """Trials whose bound is at least the observed error."""
        return sum(1 for e, b in zip(self.errors, self.bounds) if np.isfinite(b) and e <= b)


@dataclass
class ScalingReport:
    rows: List[ScalingRow]
    slope: float

    @property
    def dominance_fraction(self) -> float:
        total = sum(len(r.errors) for r in self.rows)
        return sum(r.dominated for r in self.rows) / total if total else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'slope': self.slope,
            'dominance_fraction': self.dominance_fraction,
            'rows': [{'n': r.n, 'mean_error': r.mean_error, 'mean_bound': r.mean_bound,
                      'dominated': r.dominated, 'trials': len(r.errors)} for r in self.rows],
        }


def theory_trial(cfg: BenchConfig, rng: np.random.Generator,
                 solver: Optional[SolverConfig] = None) -> Tuple[float, float, float]:
    """One planted instance fitted at the lambda rule.

    Returns:
        (squared l2 error, error bound or nan when kappa is 0, lambda used)
    """
    truth = gen_truth(cfg, rng)
    problem = gen_measurements(truth.matrix, cfg, rng)
    layout = cfg.layout()
    support = sorted({j for g in truth.active_groups for j in layout.base.groups[g]})
    kappa = estimate_rsc(problem, layout, support).kappa if support else 0.0
    params = bound_params(problem, layout, max(cfg.k_active, 1), cfg.alpha, cfg.sigma,
                          kappa if kappa > 0 else None)
    lam = lambda_rule(params)
    result = fit(problem, layout, lam, solver)
    error = float(np.sum((result.x_hat - truth.matrix) ** 2))
    bound = theorem_bound(params) if kappa > 0 else float('nan')
    return error, bound, lam


def scaling_study(cfg: BenchConfig, n_list: Sequence[int], trials: int, seed: int,
                  solver: Optional[SolverConfig] = None, threads: int = 1) -> ScalingReport:
    """Squared error at the lambda rule across sample sizes, with the log-log slope.

    Designs have unit-variance entries unless cfg.design_scale says otherwise,
    so that added measurements add signal energy.
    """
    n_list = [int(n) for n in n_list]
    if not n_list or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError(f"n_list must be strictly ascending: {n_list}")
    if trials < 1:
        raise ValueError(f"trials must be >= 1: {trials}")
    scale = cfg.design_scale if cfg.design_scale is not None else 1.0

    def one(key):
        i, j = key
        return theory_trial(replace(cfg, n=n_list[i], design_scale=scale),
                            trial_rng(seed, i, j), solver)

    keys = [(i, j) for i in range(len(n_list)) for j in range(trials)]
    outcomes = map_trials(one, keys, threads)
    rows = []
    for i, n in enumerate(n_list):
        chunk = outcomes[i * trials:(i + 1) * trials]
        errors = [e for e, _, _ in chunk]
        bounds = [b for _, b, _ in chunk]
        finite = [b for b in bounds if np.isfinite(b)]
        rows.append(ScalingRow(n, float(np.mean(errors)),
                               float(np.mean(finite)) if finite else float('nan'),
                               errors, bounds, [lam for _, _, lam in chunk]))
    means = np.array([r.mean_error for r in rows])
    if len(rows) >= 2 and np.all(means > 0):
        slope = float(np.polyfit(np.log([r.n for r in rows]), np.log(means), 1)[0])
    else:
        slope = float('nan')
    logger.info("scaling slope %.3f over n=%s", slope, n_list)
    return ScalingReport(rows, slope)
