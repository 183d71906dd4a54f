# Storage Module
"""
storage - File ingestion and result export.

This module provides:
- Manifest / load_manifest / load_problem: per-task CSV problems
- load_groups / save_groups: explicit, chain and grid group documents
- ResultExporter: JSON and CSV outputs of every command
"""

from .manifest import (
    Manifest,
    load_manifest,
    save_manifest,
    load_problem,
    load_groups,
    save_groups,
    load_manifest_groups,
    load_truth,
    group_set_from_document,
    read_matrix,
)
from .results_export import ExportConfig, ResultExporter, to_jsonable

__all__ = [
    # Manifest
    'Manifest', 'load_manifest', 'save_manifest', 'load_problem',
    'load_groups', 'save_groups', 'load_manifest_groups', 'load_truth',
    'group_set_from_document', 'read_matrix',
    # Export
    'ExportConfig', 'ResultExporter', 'to_jsonable',
]
