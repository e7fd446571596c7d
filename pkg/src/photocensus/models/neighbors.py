"""K-nearest-neighbor prediction over standardized points."""

from __future__ import annotations

import numpy as np


def knn_predict(
    points: np.ndarray, labels: np.ndarray, queries: np.ndarray, k: int
) -> np.ndarray:
    """Mean label of the k nearest training points per query row.

    Euclidean distance; k is capped at the number of stored points. Distance
    ties resolve toward the lower point index (stable sort), keeping results
    deterministic.
    """
    k = min(k, points.shape[0])
    diffs = queries[:, None, :] - points[None, :, :]
    sq_dist = (diffs * diffs).sum(axis=2)
    order = np.argsort(sq_dist, axis=1, kind="stable")
    nearest = order[:, :k]
    return labels[nearest].mean(axis=1)
