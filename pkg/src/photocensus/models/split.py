"""Public split-search interface over the backend kernels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kernels
from .tree import IMPURITY_CODES


@dataclass(frozen=True)
class SplitDecision:
    column: int
    threshold: float
    gain: float


def best_split(
    X: np.ndarray,
    y: np.ndarray,
    columns=None,
    impurity: str = "variance",
    min_samples_leaf: int = 1,
) -> SplitDecision | None:
    """Best (column, threshold) by impurity reduction, or None.

    Thresholds are midpoints between consecutive distinct sorted values; ties
    break toward the lowest column index, then the lowest threshold. Returns
    None when no candidate strictly reduces impurity.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be a 2-d matrix")
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"{X.shape[0]} rows but {y.shape[0]} labels")
    if X.shape[0] < 2:
        raise ValueError("split search needs at least 2 rows")
    if impurity not in IMPURITY_CODES:
        raise ValueError(f"impurity must be one of {sorted(IMPURITY_CODES)}")
    if columns is None:
        columns = np.arange(X.shape[1], dtype=np.int64)
    else:
        columns = np.sort(np.asarray(columns, dtype=np.int64))
    col, thr, gain = kernels.best_split_kernel(
        X, y, columns, IMPURITY_CODES[impurity], min_samples_leaf
    )
    if col < 0 or gain <= 0.0:
        return None
    return SplitDecision(column=col, threshold=thr, gain=gain)
