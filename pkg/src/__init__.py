# SOSlasso Toolkit
"""
SOSlasso Toolkit - Sparse overlapping sets lasso with a benchmark and theory harness.

Modules:
    soslasso: Groups, penalty, losses and the proximal gradient solver
    experiments: Synthetic benchmarks and theory check suites
    storage: Manifest/CSV ingestion and result export
"""

__version__ = "1.0.0"
