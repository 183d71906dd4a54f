# Problem Manifest Module
"""
manifest - JSON/CSV ingestion for fitting problems and group documents.

A manifest is a small JSON file that points at per-task CSV files and a
group source:

    {
        "loss": "squared",
        "tasks": ["task0.csv", "task1.csv"],
        "groups": "groups.json",
        "truth": "truth.csv",
        "sigma": 0.1
    }

Relative paths resolve against the manifest's directory. Every task CSV has
one row per sample; the last column is the response. "groups" is either a
path to a group document or an inline document. A group document is one of

    {"p": 14, "groups": [[0, 1, 2], [2, 3, 4]]}
    {"chain": {"p": 14, "B": 6, "shift": 4}}
    {"grid": {"shape": [5, 5, 1], "block": [3, 3, 1], "shift": [2, 2, 1]}}

Usage:
    manifest = load_manifest('data/manifest.json')
    problem = load_problem(manifest)
    groups = load_groups('data/groups.json')
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Union
import json
import logging

import numpy as np

from soslasso.errors import InputError, SOSLassoError
from soslasso.groups import GroupSet, build_group_set, chain_groups, grid_groups
from soslasso.losses import LossKind, MultitaskProblem

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
GroupSource = Union[Path, Dict[str, Any]]


def _read_json(path: Path) -> Any:
    if not path.is_file():
        raise InputError(f"file not found: {path}")
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise InputError(f"invalid JSON in {path}: {e}") from None


def read_matrix(path: PathLike) -> np.ndarray:
    """Comma-separated numeric table as a 2-D float array.

    Raises:
        InputError: Missing file or non-numeric content
    """
    path = Path(path)
    if not path.is_file():
        raise InputError(f"file not found: {path}")
    try:
        return np.loadtxt(path, delimiter=',', ndmin=2, dtype=np.float64)
    except ValueError as e:
        raise InputError(f"cannot parse {path}: {e}") from None


def group_set_from_document(doc: Dict[str, Any], source: str = '<inline>') -> GroupSet:
    """Build a GroupSet from an explicit, chain or grid group document.

    Raises:
        InputError: Unrecognised or incomplete document
        SOSLassoError: Invalid geometry or indices (from the groups module)
    """
    if not isinstance(doc, dict):
        raise InputError(f"group document in {source} must be an object")
    try:
        if 'chain' in doc:
            spec = doc['chain']
            return chain_groups(int(spec['p']), int(spec['B']), int(spec['shift']))
        if 'grid' in doc:
            spec = doc['grid']
            return grid_groups(spec['shape'], spec['block'], spec['shift'])
        if 'groups' in doc:
            return build_group_set(doc['groups'], int(doc['p']))
    except (KeyError, TypeError) as e:
        raise InputError(f"incomplete group document in {source}: missing or bad {e}") from None
    raise InputError(f"group document in {source} needs 'groups', 'chain' or 'grid'")


def load_groups(path: PathLike) -> GroupSet:
    """Read a group document from disk."""
    path = Path(path)
    return group_set_from_document(_read_json(path), str(path))


def save_groups(gs: GroupSet, path: PathLike) -> None:
    """Write an explicit group document."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(gs.to_dict(), f, sort_keys=True, indent=2)
        f.write('\n')


@dataclass
class Manifest:
    """Parsed problem manifest.

    Attributes:
        loss_kind: Loss applied to every task
        tasks: Resolved per-task CSV paths
        groups: Resolved group document path, or an inline document
        truth: Optional p x T reference coefficients CSV
        sigma: Optional known noise level
        base_dir: Directory relative paths were resolved against
    """
    loss_kind: LossKind
    tasks: List[Path]
    groups: Optional[GroupSource] = None
    truth: Optional[Path] = None
    sigma: Optional[float] = None
    base_dir: Path = Path('.')

    def __post_init__(self):
        self.loss_kind = LossKind.parse(self.loss_kind)
        if not self.tasks:
            raise InputError("manifest lists no task files")
        if self.sigma is not None and self.sigma < 0:
            raise InputError(f"sigma must be >= 0: {self.sigma}")

    @property
    def T(self) -> int:
        return len(self.tasks)

    def _relative(self, path: Path) -> str:
        try:
            return path.relative_to(self.base_dir).as_posix()
        except ValueError:
            return path.as_posix()

    def to_dict(self) -> Dict[str, Any]:
        """JSON-ready form with paths relative to base_dir."""
        data: Dict[str, Any] = {
            'loss': self.loss_kind.value,
            'tasks': [self._relative(p) for p in self.tasks],
        }
        if isinstance(self.groups, Path):
            data['groups'] = self._relative(self.groups)
        elif self.groups is not None:
            data['groups'] = self.groups
        if self.truth is not None:
            data['truth'] = self._relative(self.truth)
        if self.sigma is not None:
            data['sigma'] = self.sigma
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any], base_dir: PathLike = '.') -> 'Manifest':
        """Create a manifest from its JSON form.

        Raises:
            InputError: Missing or mistyped fields
        """
        base = Path(base_dir)
        if not isinstance(data, dict):
            raise InputError("manifest must be a JSON object")
        tasks = data.get('tasks')
        if not isinstance(tasks, list) or not all(isinstance(t, str) for t in tasks):
            raise InputError("manifest 'tasks' must be a list of file names")
        groups = data.get('groups')
        if isinstance(groups, str):
            groups = base / groups
        elif groups is not None and not isinstance(groups, dict):
            raise InputError("manifest 'groups' must be a path or a group document")
        truth = data.get('truth')
        try:
            loss = LossKind.parse(data.get('loss', 'squared'))
        except ValueError as e:
            raise InputError(str(e)) from None
        return cls(
            loss_kind=loss,
            tasks=[base / t for t in tasks],
            groups=groups,
            truth=base / truth if truth else None,
            sigma=float(data['sigma']) if data.get('sigma') is not None else None,
            base_dir=base,
        )


def load_manifest(path: PathLike) -> Manifest:
    """Read a manifest; relative paths resolve against its directory."""
    path = Path(path)
    return Manifest.from_dict(_read_json(path), path.parent)


def save_manifest(manifest: Manifest, path: PathLike) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(manifest.to_dict(), f, sort_keys=True, indent=2)
        f.write('\n')


def load_problem(manifest: Manifest) -> MultitaskProblem:
    """Read every task CSV and assemble a MultitaskProblem.

    Raises:
        InputError: Missing files, too few columns or disagreeing column counts
        SOSLassoError: Invalid labels for the logistic loss
    """
    designs, responses = [], []
    width = None
    for path in manifest.tasks:
        table = read_matrix(path)
        if table.shape[1] < 2:
            raise InputError(f"{path} needs at least one feature column and a response")
        if width is None:
            width = table.shape[1]
        elif table.shape[1] != width:
            raise InputError(
                f"{path} has {table.shape[1]} columns, expected {width}")
        designs.append(table[:, :-1])
        responses.append(table[:, -1])
        logger.debug("loaded %s: %d samples x %d features", path, *designs[-1].shape)
    try:
        return MultitaskProblem(designs, responses, manifest.loss_kind, manifest.sigma)
    except SOSLassoError as e:
        raise InputError(f"{manifest.base_dir}: {e}") from e


def load_manifest_groups(manifest: Manifest, override: Optional[PathLike] = None) -> GroupSet:
    """Group source from an explicit path, else from the manifest.

    Raises:
        InputError: No group source given
    """
    if override is not None:
        return load_groups(override)
    if isinstance(manifest.groups, Path):
        return load_groups(manifest.groups)
    if isinstance(manifest.groups, dict):
        return group_set_from_document(manifest.groups, 'manifest')
    raise InputError("no group source: pass --groups or set 'groups' in the manifest")


def load_truth(manifest: Manifest, p: int, T: int) -> Optional[np.ndarray]:
    """Reference coefficients as a p x T matrix, or None when absent."""
    if manifest.truth is None:
        return None
    truth = read_matrix(manifest.truth)
    if truth.shape != (p, T):
        raise InputError(f"{manifest.truth} must be {p} x {T}, got {truth.shape[0]} x {truth.shape[1]}")
    return truth
