# Tests for the SOSlasso Toolkit
"""
Test suite for the SOSlasso toolkit.

Test modules:
    test_groups: Group sets and duplication maps
    test_penalty: Norm, proximal operator and dual norm bound
    test_losses: Multitask losses and Lipschitz estimates
    test_proxgrad: Accelerated proximal gradient
    test_solver: Fits, paths and lambda selection
    test_metrics: Error and support measures
    test_manifest: Manifest and group document ingestion
    test_results_export: JSON and CSV writers

Integration tests:
    test_app_controller: Subcommand coordinator
    test_integration: Command line end to end
    experiments/: Benchmark and theory harness
"""
