# Results Export Module
"""
results_export - Machine-readable output for fits, paths, benchmarks and checks.

Writes:
- JSON documents (sorted keys, two-space indent, non-finite values as null)
- CSV tables and matrices with round-trip float precision

Nothing time-dependent is written, so rerunning a command with the same
inputs and seed reproduces every file byte for byte.

Usage:
    exporter = ResultExporter()

    # Single fit
    exporter.export_fit(result, 'out/')

    # Benchmark report plus its summary.json
    exporter.export_bench(report, 'out/report.csv')
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union
import csv
import json
import logging
import math

import numpy as np

from soslasso.groups import GroupSet
from soslasso.losses import MultitaskProblem
from soslasso.metrics import mse
from soslasso.solver import FitResult

from .manifest import Manifest, save_groups, save_manifest

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


@dataclass
class ExportConfig:
    """Export configuration.

    Attributes:
        precision: Significant digits for CSV floats, None for shortest round-trip
        indent: JSON indentation
    """
    precision: Optional[int] = None
    indent: int = 2

    def __post_init__(self):
        """Validate configuration."""
        if self.precision is not None and not 1 <= self.precision <= 17:
            raise ValueError(f"Precision must be between 1 and 17: {self.precision}")
        if self.indent < 0:
            raise ValueError(f"Indent must be >= 0: {self.indent}")


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays and non-finite floats into plain JSON values."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


class ResultExporter:
    """Writes command outputs as JSON and CSV files.

    Directories are created on demand.
    """

    def __init__(self, default_config: Optional[ExportConfig] = None):
        """Initialize exporter.

        Args:
            default_config: Default export configuration
        """
        self._config = default_config or ExportConfig()

    # -- primitives ---------------------------------------------------------

    def format_float(self, value: float) -> str:
        """CSV text for one number."""
        value = float(value)
        if self._config.precision is None:
            return repr(value)
        return format(value, f".{self._config.precision}g")

    def _cell(self, value: Any) -> str:
        if isinstance(value, (bool, np.bool_)):
            return 'true' if value else 'false'
        if isinstance(value, (float, np.floating)):
            return self.format_float(value)
        return str(value)

    def write_json(self, data: Any, path: PathLike) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(to_jsonable(data), f, sort_keys=True, indent=self._config.indent,
                      allow_nan=False)
            f.write('\n')
        logger.debug("wrote %s", path)
        return path

    def write_table(self, rows: Iterable[Sequence[Any]], path: PathLike,
                    header: Optional[Sequence[str]] = None) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='') as f:
            writer = csv.writer(f, lineterminator='\n')
            if header is not None:
                writer.writerow(header)
            for row in rows:
                writer.writerow([self._cell(v) for v in row])
        logger.debug("wrote %s", path)
        return path

    def write_matrix(self, matrix: np.ndarray, path: PathLike) -> Path:
        """Headerless numeric CSV, one matrix row per line."""
        matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
        return self.write_table(([float(v) for v in row] for row in matrix), path)

    # -- command outputs ----------------------------------------------------

    def export_fit(self, result: FitResult, out_dir: PathLike,
                   truth: Optional[np.ndarray] = None) -> List[Path]:
        """result.json (x_hat, selected groups, diagnostics) and coefficients.csv."""
        out = Path(out_dir)
        doc = {
            'x_hat': result.x_hat,
            'selected_groups': list(result.selected_groups),
            'diagnostics': result.diagnostics(),
            'objective_trace': list(result.objective_trace),
        }
        if not result.converged:
            doc['flag'] = 'no_convergence'
        if truth is not None:
            doc['mse'] = mse(result.x_hat, truth)
        return [self.write_json(doc, out / 'result.json'),
                self.write_matrix(result.x_hat, out / 'coefficients.csv')]

    def export_path(self, results: Sequence[FitResult], out_dir: PathLike,
                    truth: Optional[np.ndarray] = None) -> Path:
        """path.csv: one row per lambda in path order."""
        rows = []
        for r in results:
            error = mse(r.x_hat, truth) if truth is not None else ''
            rows.append([r.lambda_, r.objective, r.nnz, len(r.selected_groups), error])
        return self.write_table(
            rows, Path(out_dir) / 'path.csv',
            header=['lambda', 'objective', 'nnz', 'selected_groups_count', 'mse_if_truth_given'])

    def export_bench(self, report, out_path: PathLike) -> List[Path]:
        """Per-trial report CSV plus summary.json beside it."""
        out_path = Path(out_path)
        rows = [[r.sweep_value, r.method, r.trial, r.lambda_selected, r.mse]
                for r in report.records]
        csv_path = self.write_table(
            rows, out_path, header=['sweep_value', 'method', 'trial', 'lambda_selected', 'mse'])
        summary_path = self.write_json(report.summary(), out_path.parent / 'summary.json')
        return [csv_path, summary_path]

    def export_check(self, report, out_dir: PathLike) -> Path:
        return self.write_json(report.to_dict(), Path(out_dir) / 'check_report.json')

    def export_generated(self, truth: np.ndarray, problem: MultitaskProblem, gs: GroupSet,
                         out_dir: PathLike, extra: Optional[Dict[str, Any]] = None) -> List[Path]:
        """truth.csv, one taskN.csv per task, groups.json and manifest.json.

        Task files carry the design columns followed by the response.
        """
        out = Path(out_dir)
        written = [self.write_matrix(truth, out / 'truth.csv')]
        names = []
        for t, (design, y) in enumerate(zip(problem.designs, problem.responses)):
            name = f'task{t}.csv'
            written.append(self.write_matrix(np.column_stack([design, y]), out / name))
            names.append(name)
        save_groups(gs, out / 'groups.json')
        written.append(out / 'groups.json')
        manifest = Manifest(
            loss_kind=problem.loss_kind,
            tasks=[out / n for n in names],
            groups=out / 'groups.json',
            truth=out / 'truth.csv',
            sigma=problem.noise_sigma,
            base_dir=out,
        )
        save_manifest(manifest, out / 'manifest.json')
        written.append(out / 'manifest.json')
        if extra:
            written.append(self.write_json(extra, out / 'generator.json'))
        return written
