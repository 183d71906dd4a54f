#!/usr/bin/env python
# Application Entry Point
"""
main - Command line entry point for the SOSlasso toolkit.

Subcommands:
    fit    Solve one penalized problem (or select lambda by cross-validation)
    path   Solve along a descending lambda grid with warm starts
    bench  Planted-signal comparison of lasso, latent group lasso and SOSlasso
    check  Run a named property or theory suite
    gen    Write a synthetic problem (truth, task CSVs, groups, manifest)

Usage:
    python main.py fit --problem data/manifest.json --lambda 0.05 --out out/
    python main.py check --suite norm --trials 200 --seed 1
"""

import sys
import os
import argparse
import logging
from typing import List, Optional

# Add src to path for imports
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from app_controller import AppController, EXIT_INPUT
from experiments.bench import METHODS, BenchConfig
from experiments.checks import SUITES

MODES = ['soslasso', 'group', 'l1']
LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text}") from None


def _add_solver_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--problem', required=True, help='Problem manifest (JSON)')
    parser.add_argument('--groups', help='Group document, overrides the manifest')
    parser.add_argument('--mode', choices=MODES, default='soslasso',
                        help='Penalty terms (default: soslasso)')
    parser.add_argument('--alpha', type=float, default=1.0,
                        help='Weight of the group l2 term (default: 1.0)')
    parser.add_argument('--tol', type=float, help='Stationarity tolerance')
    parser.add_argument('--max-iters', type=int, help='Iteration cap per fit')
    parser.add_argument('--lambdas', type=_float_list, help='Comma-separated lambda values')
    parser.add_argument('--grid', help='Log grid below lambda_max as count:min_ratio')
    parser.add_argument('--out', default='.', help='Output directory (default: .)')


def build_parser() -> argparse.ArgumentParser:
    """Argument parser for every subcommand."""
    parser = argparse.ArgumentParser(
        prog='soslasso',
        description='Sparse overlapping sets lasso for multitask regression',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
    soslasso gen --profile desk --seed 7 --out data/
    soslasso fit --problem data/manifest.json --lambda 0.01 --out fit/
    soslasso path --problem data/manifest.json --grid 20:0.01 --out path/
    soslasso bench --profile desk --sweep noise --out bench/report.csv
    soslasso check --suite theorem --trials 100
        """
    )
    parser.add_argument('--threads', type=int, default=None,
                        help='Worker threads (default: $SOSLASSO_THREADS or 1)')
    parser.add_argument('--verbose', '-v', action='store_true', help='Debug logging')
    sub = parser.add_subparsers(dest='command', required=True)

    p_fit = sub.add_parser('fit', help='Fit one lambda')
    _add_solver_args(p_fit)
    p_fit.add_argument('--lambda', dest='lam', type=float, help='Regularization weight')
    p_fit.add_argument('--folds', type=int, default=4,
                       help='Cross-validation folds when no --lambda is given (default: 4)')
    p_fit.add_argument('--seed', type=int, default=0, help='Fold shuffling seed')

    p_path = sub.add_parser('path', help='Regularization path')
    _add_solver_args(p_path)

    p_bench = sub.add_parser('bench', help='Synthetic method comparison')
    p_bench.add_argument('--profile', choices=sorted(BenchConfig.PROFILES), default='desk')
    p_bench.add_argument('--sweep', choices=['noise', 'alpha'], default='noise')
    p_bench.add_argument('--methods', nargs='+', choices=list(METHODS), default=list(METHODS))
    p_bench.add_argument('--values', type=_float_list, help='Sweep values (default grid if omitted)')
    p_bench.add_argument('--trials', type=int, help='Trials per sweep point')
    p_bench.add_argument('--seed', type=int, default=0)
    p_bench.add_argument('--out', default='report.csv', help='Per-trial CSV (summary.json beside it)')

    p_check = sub.add_parser('check', help='Property and theory suites')
    p_check.add_argument('--suite', choices=list(SUITES), required=True)
    p_check.add_argument('--trials', type=int, default=100)
    p_check.add_argument('--seed', type=int, default=0)
    p_check.add_argument('--out', default='.', help='Directory for check_report.json')

    p_gen = sub.add_parser('gen', help='Generate a synthetic problem')
    p_gen.add_argument('--profile', choices=sorted(BenchConfig.PROFILES), default='paper')
    p_gen.add_argument('--seed', type=int, default=0)
    p_gen.add_argument('--p', type=int)
    p_gen.add_argument('--B', type=int)
    p_gen.add_argument('--shift', type=int)
    p_gen.add_argument('--T', type=int)
    p_gen.add_argument('--n', type=int)
    p_gen.add_argument('--k-active', dest='k_active', type=int)
    p_gen.add_argument('--alpha', type=float)
    p_gen.add_argument('--sigma', type=float)
    p_gen.add_argument('--out', default='.', help='Output directory')
    return parser


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO,
                        format=LOG_FORMAT, stream=sys.stderr, force=True)


def dispatch(controller: AppController, args: argparse.Namespace) -> int:
    """Route parsed arguments to the controller; returns the exit code."""
    if args.command == 'fit':
        return controller.run_fit(
            args.problem, args.out, lam=args.lam, groups=args.groups, mode=args.mode,
            alpha=args.alpha, tol=args.tol, max_iters=args.max_iters,
            lambdas=args.lambdas, grid=args.grid, folds=args.folds, seed=args.seed)
    if args.command == 'path':
        return controller.run_path(
            args.problem, args.out, groups=args.groups, mode=args.mode, alpha=args.alpha,
            tol=args.tol, max_iters=args.max_iters, lambdas=args.lambdas, grid=args.grid)
    if args.command == 'bench':
        return controller.run_bench(
            args.out, profile=args.profile, sweep=args.sweep, methods=args.methods,
            trials=args.trials, seed=args.seed, values=args.values)
    if args.command == 'check':
        return controller.run_check(args.suite, args.out, trials=args.trials, seed=args.seed)
    overrides = {k: getattr(args, k) for k in ('p', 'B', 'shift', 'T', 'n', 'k_active', 'alpha', 'sigma')}
    return controller.run_gen(args.out, profile=args.profile, seed=args.seed, overrides=overrides)


def main(argv: Optional[List[str]] = None) -> int:
    """Application entry point."""
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        controller = AppController(threads=args.threads)
    except ValueError as e:
        logging.getLogger('main').error("%s", e)
        return EXIT_INPUT
    return dispatch(controller, args)


if __name__ == '__main__':
    sys.exit(main())
