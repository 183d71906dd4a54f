# Application Controller - Wiring the CLI to the SOSlasso library
"""
app_controller - Central coordinator for the soslasso command line.

Each run_* method takes plain option values, loads inputs through the
storage layer, calls the library or experiment harness, writes results
through ResultExporter and returns the process exit code:

    0  success
    1  input or configuration error (or a failed check suite)
    2  numerical non-convergence (outputs are still written and flagged)

Usage:
    controller = AppController(threads=4)
    code = controller.run_fit('data/manifest.json', out_dir='out', lam=0.05)
"""

import logging
import time
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from soslasso import (
    GroupSet,
    MultitaskProblem,
    PenaltyConfig,
    SolverConfig,
    SOSLassoError,
    TaskLayout,
    cross_validate,
    default_lambda_grid,
    fit,
    lambda_max,
    reg_path,
    replicate_across_tasks,
)
from soslasso.errors import InputError
from soslasso.groups import chain_groups
from experiments import BenchConfig, SweepKind, gen_measurements, gen_truth, run_suite, run_sweep
from experiments.bench import METHODS
from experiments.trials import resolve_threads, trial_rng
from storage import (
    ResultExporter,
    load_manifest,
    load_manifest_groups,
    load_problem,
    load_truth,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NO_CONVERGENCE = 2

PathLike = Union[str, Path]


def parse_grid_spec(spec: str) -> Tuple[int, float]:
    """'count:min_ratio' -> (count, min_ratio).

    Raises:
        InputError: Malformed specification
    """
    try:
        count, ratio = spec.split(':')
        return int(count), float(ratio)
    except ValueError:
        raise InputError(f"grid must look like count:min_ratio: {spec}") from None


class AppController:
    """Runs one CLI command end to end.

    Attributes:
        threads: Worker threads for trials, folds and sweeps
    """

    def __init__(self, threads: Optional[int] = None,
                 exporter: Optional[ResultExporter] = None):
        """Initialize controller.

        Args:
            threads: Thread count, None to read SOSLASSO_THREADS
            exporter: Result writer (default settings if None)
        """
        self.threads = resolve_threads(threads)
        self._exporter = exporter or ResultExporter()

    # -- shared loading -----------------------------------------------------

    def _load(self, manifest_path: PathLike, groups_path: Optional[PathLike]
              ) -> Tuple[MultitaskProblem, TaskLayout, Optional[np.ndarray]]:
        manifest = load_manifest(manifest_path)
        problem = load_problem(manifest)
        gs: GroupSet = load_manifest_groups(manifest, groups_path)
        if gs.p != problem.p:
            raise InputError(
                f"groups cover p={gs.p} but task files have {problem.p} feature columns")
        truth = load_truth(manifest, problem.p, problem.T)
        return problem, replicate_across_tasks(gs, problem.T), truth

    @staticmethod
    def _solver(mode: str, alpha: float, tol: Optional[float], max_iters: Optional[int]) -> SolverConfig:
        options = {'penalty': PenaltyConfig(alpha=alpha, mode=mode)}
        if tol is not None:
            options['stationarity_tol'] = tol
        if max_iters is not None:
            options['max_iters'] = max_iters
        return SolverConfig(**options)

    def _grid(self, problem: MultitaskProblem, layout: TaskLayout, cfg: SolverConfig,
              lambdas: Optional[Sequence[float]], grid: Optional[str]) -> np.ndarray:
        if lambdas:
            return np.asarray(lambdas, dtype=np.float64)
        count, ratio = parse_grid_spec(grid or '30:0.001')
        return default_lambda_grid(lambda_max(problem, layout, cfg.penalty), count, ratio)

    def _guard(self, command: str, action) -> int:
        try:
            return action()
        except (SOSLassoError, ValueError, OSError) as e:
            logger.error("%s: %s", command, e)
            return EXIT_INPUT

    # -- commands -----------------------------------------------------------

    def run_fit(self, manifest: PathLike, out_dir: PathLike, lam: Optional[float] = None,
                groups: Optional[PathLike] = None, mode: str = 'soslasso', alpha: float = 1.0,
                tol: Optional[float] = None, max_iters: Optional[int] = None,
                lambdas: Optional[Sequence[float]] = None, grid: Optional[str] = None,
                folds: int = 4, seed: int = 0) -> int:
        """Fit one lambda, or pick one by cross-validation when only a grid is given."""
        def action() -> int:
            problem, layout, truth = self._load(manifest, groups)
            cfg = self._solver(mode, alpha, tol, max_iters)
            chosen = lam
            if chosen is None:
                if not lambdas and grid is None:
                    raise InputError("fit needs --lambda, --lambdas or --grid")
                candidates = self._grid(problem, layout, cfg, lambdas, grid)
                chosen, _ = cross_validate(problem, layout, candidates, folds, cfg,
                                           seed=seed, threads=self.threads)
            if chosen < 0:
                raise InputError(f"lambda must be >= 0: {chosen}")
            result = fit(problem, layout, float(chosen), cfg)
            self._exporter.export_fit(result, out_dir, truth)
            if not result.converged:
                logger.error("fit did not converge in %d iterations (residual %.3e)",
                             result.iterations, result.stationarity_residual)
                return EXIT_NO_CONVERGENCE
            logger.info("fit: lambda=%.4e objective=%.6e nnz=%d groups=%d",
                        result.lambda_, result.objective, result.nnz, len(result.selected_groups))
            return EXIT_OK
        return self._guard('fit', action)

    def run_path(self, manifest: PathLike, out_dir: PathLike,
                 groups: Optional[PathLike] = None, mode: str = 'soslasso', alpha: float = 1.0,
                 tol: Optional[float] = None, max_iters: Optional[int] = None,
                 lambdas: Optional[Sequence[float]] = None, grid: Optional[str] = None) -> int:
        def action() -> int:
            problem, layout, truth = self._load(manifest, groups)
            cfg = self._solver(mode, alpha, tol, max_iters)
            results = reg_path(problem, layout, self._grid(problem, layout, cfg, lambdas, grid), cfg)
            self._exporter.export_path(results, out_dir, truth)
            stalled = [r.lambda_ for r in results if not r.converged]
            if stalled:
                logger.error("path: %d fits did not converge: %s", len(stalled), stalled)
                return EXIT_NO_CONVERGENCE
            return EXIT_OK
        return self._guard('path', action)

    def run_bench(self, out: PathLike, profile: str = 'desk', sweep: str = 'noise',
                  methods: Optional[Sequence[str]] = None, trials: Optional[int] = None,
                  seed: Optional[int] = None, values: Optional[Sequence[float]] = None) -> int:
        def action() -> int:
            chosen = list(methods or METHODS)
            unknown = [m for m in chosen if m not in METHODS]
            if unknown:
                raise InputError(f"unknown methods {unknown} (choose from {list(METHODS)})")
            cfg = BenchConfig.from_profile(profile, trials=trials, seed=seed)
            report = run_sweep(cfg, SweepKind.parse(sweep), values, chosen, threads=self.threads)
            self._exporter.export_bench(report, out)
            failed = sum(1 for r in report.records if r.error is not None)
            if failed:
                logger.warning("bench: %d of %d method trials failed", failed, len(report.records))
            return EXIT_OK
        return self._guard('bench', action)

    def run_check(self, suite: str, out_dir: PathLike, trials: int = 100, seed: int = 0) -> int:
        def action() -> int:
            start = time.perf_counter()
            report = run_suite(suite, trials=trials, seed=seed, threads=self.threads)
            self._exporter.export_check(report, out_dir)
            logger.info("check %s: %s (%d violations in %d trials, %.1fs)", suite,
                        'passed' if report.passed else 'FAILED', report.violations,
                        report.trials, time.perf_counter() - start)
            return EXIT_OK if report.passed else EXIT_INPUT
        return self._guard('check', action)

    def run_gen(self, out_dir: PathLike, profile: str = 'paper', seed: int = 0,
                overrides: Optional[Dict[str, object]] = None) -> int:
        """Planted truth, per-task data, groups.json and a manifest."""
        def action() -> int:
            cfg = BenchConfig.from_profile(profile, seed=seed, **(overrides or {}))
            truth = gen_truth(cfg, trial_rng(cfg.seed, 0))
            problem = gen_measurements(truth.matrix, cfg, trial_rng(cfg.seed, 1))
            self._exporter.export_generated(
                truth.matrix, problem, chain_groups(cfg.p, cfg.B, cfg.shift), out_dir,
                extra={'config': cfg.to_dict(), 'active_groups': truth.active_groups})
            logger.info("gen: p=%d T=%d n=%d active groups %s", cfg.p, cfg.T, cfg.n,
                        truth.active_groups)
            return EXIT_OK
        return self._guard('gen', action)
