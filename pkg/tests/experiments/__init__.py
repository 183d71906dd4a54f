# Experiment harness tests package
