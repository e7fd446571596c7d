"""Pure numpy implementations of the tree hot kernels.

These mirror the compiled backend operation for operation. Bit-identical
results across the two backends depend on a pinned arithmetic recipe, so
any change here must be made in ``_fast.pyx`` too:

- candidate order: columns in the order given, thresholds ascending, and a
  strictly-greater gain comparison, so the first of any tied candidates wins;
- per-column stats from sequential cumulative sums over stably argsorted
  values (np.cumsum accumulates left to right, matching a C loop);
- impurity arithmetic written as explicit scalar-shaped elementwise ops in
  the exact order the compiled loop performs them;
- regression targets centered by their mean up front, which leaves every
  gain mathematically unchanged but makes constant-label gains exactly 0.0.
"""

from __future__ import annotations

import numpy as np

IMPURITY_VARIANCE = 0
IMPURITY_GINI = 1

NO_SPLIT = (-1, float("nan"), float("-inf"))


def best_split_kernel(
    X: np.ndarray, y: np.ndarray, columns: np.ndarray, impurity: int, min_leaf: int = 1
) -> tuple[int, float, float]:
    """Exhaustive split search over the given columns.

    Returns ``(column, threshold, gain)`` for the best structurally valid
    candidate (a midpoint between consecutive distinct sorted values leaving
    at least ``min_leaf`` rows on each side), with ``gain`` possibly zero or
    negative; callers decide whether such a split is worth taking. Returns
    ``NO_SPLIT`` when no candidate exists.
    """
    n = X.shape[0]
    if n < 2 * min_leaf or n < 2:
        return NO_SPLIT

    if impurity == IMPURITY_VARIANCE:
        # Sequential accumulation (cumsum) rather than np.sum keeps the float
        # result identical to the compiled backend's running total.
        mean = np.cumsum(y)[-1] / n
        yv = y - mean
    elif impurity == IMPURITY_GINI:
        yv = y
    else:
        raise ValueError(f"unknown impurity code {impurity}")

    best_col, best_thr, best_gain = NO_SPLIT
    n_float = float(n)
    counts_left = np.arange(1, n, dtype=np.float64)
    counts_right = n_float - counts_left

    size_ok = (counts_left >= min_leaf) & (counts_right >= min_leaf)

    for col in columns:
        xc = X[:, col]
        order = np.argsort(xc, kind="stable")
        xs = xc[order]
        valid = (xs[1:] != xs[:-1]) & size_ok
        if not valid.any():
            continue
        ys = yv[order]
        csum = np.cumsum(ys)
        total = csum[-1]

        if impurity == IMPURITY_VARIANCE:
            csum2 = np.cumsum(ys * ys)
            total2 = csum2[-1]
            pm = total / n_float
            parent = total2 / n_float - pm * pm
            ls = csum[:-1]
            ls2 = csum2[:-1]
            rs = total - ls
            rs2 = total2 - ls2
            lm = ls / counts_left
            left_imp = ls2 / counts_left - lm * lm
            rm = rs / counts_right
            right_imp = rs2 / counts_right - rm * rm
        else:
            p = total / n_float
            q = 1.0 - p
            parent = 1.0 - q * q - p * p
            lo = csum[:-1]
            ro = total - lo
            pl = lo / counts_left
            ql = 1.0 - pl
            left_imp = 1.0 - ql * ql - pl * pl
            pr = ro / counts_right
            qr = 1.0 - pr
            right_imp = 1.0 - qr * qr - pr * pr

        weighted = (counts_left * left_imp + counts_right * right_imp) / n_float
        gains = parent - weighted
        gains = np.where(valid, gains, -np.inf)
        # argmax takes the first occurrence of the max, matching the compiled
        # loop's strict-greater update: lowest threshold wins a within-column tie.
        i = int(np.argmax(gains))
        gain = float(gains[i])
        if gain > best_gain:
            best_gain = gain
            best_col = int(col)
            best_thr = (float(xs[i]) + float(xs[i + 1])) * 0.5

    return best_col, best_thr, best_gain


def tree_predict(
    feature: np.ndarray,
    threshold: np.ndarray,
    left: np.ndarray,
    right: np.ndarray,
    value: np.ndarray,
    X: np.ndarray,
) -> np.ndarray:
    """Route every row of X through a flat-array tree and read leaf values.

    Node 0 is the root; a node is a leaf iff ``left[node] == -1``. Rows go
    left when ``x[feature] <= threshold`` (NaN compares false, so NaN rows
    go right in both backends).
    """
    n = X.shape[0]
    node = np.zeros(n, dtype=np.int32)
    active = left[node] != -1
    while active.any():
        rows = np.nonzero(active)[0]
        at = node[rows]
        xv = X[rows, feature[at]]
        go_left = xv <= threshold[at]
        node[rows] = np.where(go_left, left[at], right[at])
        active = left[node] != -1
    return value[node]
