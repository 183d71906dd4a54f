# Error metrics
"""
metrics.py - Recovery and prediction error measures

Usage:
    err = mse(x_hat, truth)                       # ||x_hat - truth||_F^2 / (p T)
    frac = support_overlap_fraction(x_hat, mask)
    rate = misclassification_rate(scores, labels)
"""

import numpy as np

from .errors import BadLabels, ShapeMismatch


def mse(x_hat: np.ndarray, truth: np.ndarray) -> float:
    """Per-entry mean squared error between two coefficient matrices.

    Raises:
        ShapeMismatch: Shapes differ
    """
    x_hat = np.asarray(x_hat, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if x_hat.shape != truth.shape:
        raise ShapeMismatch(f"shapes differ: {x_hat.shape} vs {truth.shape}")
    if x_hat.size == 0:
        return 0.0
    diff = x_hat - truth
    return float(np.sum(diff * diff)) / diff.size


def support_overlap_fraction(x_hat: np.ndarray, reference_mask: np.ndarray) -> float:
    """Fraction of selected coordinates that fall inside a reference region.

    A coordinate is selected when it is nonzero in any task. Returns 0.0
    when nothing is selected.

    Args:
        x_hat: p-vector or p x T matrix
        reference_mask: Boolean p-vector

    Raises:
        ShapeMismatch: Mask length differs from p
    """
    x_hat = np.asarray(x_hat, dtype=np.float64)
    if x_hat.ndim == 1:
        x_hat = x_hat[:, None]
    mask = np.asarray(reference_mask, dtype=bool).ravel()
    if mask.shape[0] != x_hat.shape[0]:
        raise ShapeMismatch(
            f"mask has {mask.shape[0]} entries, coefficients have {x_hat.shape[0]} rows")
    selected = np.any(x_hat != 0, axis=1)
    count = int(selected.sum())
    if count == 0:
        return 0.0
    return int((selected & mask).sum()) / count


def misclassification_rate(scores: np.ndarray, labels: np.ndarray) -> float:
    """Share of labels whose sign disagrees with the score (score 0 predicts +1).

    Raises:
        ShapeMismatch: Lengths differ
        BadLabels: Labels other than +1/-1
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels, dtype=np.float64).ravel()
    if scores.shape != labels.shape:
        raise ShapeMismatch(f"{scores.shape[0]} scores but {labels.shape[0]} labels")
    if not np.all(np.abs(labels) == 1.0):
        raise BadLabels(f"labels must be +1/-1: {np.unique(labels).tolist()[:5]}")
    if labels.size == 0:
        return 0.0
    predicted = np.where(scores >= 0.0, 1.0, -1.0)
    return float(np.mean(predicted != labels))
