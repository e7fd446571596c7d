"""Constant-output baselines: the floor every real learner must beat."""

from __future__ import annotations

import numpy as np


def fit_mean(y: np.ndarray) -> float:
    return float(y.mean())


def fit_mode(y: np.ndarray) -> int:
    """Majority class of binary labels; an exact tie goes to the first-seen class."""
    ones = float(y.sum())
    zeros = y.shape[0] - ones
    if ones > zeros:
        return 1
    if zeros > ones:
        return 0
    return int(y[0])
