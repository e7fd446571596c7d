"""CART trees on flat arrays, shared by every tree-based learner.

Growth is plain Python driving the split-search kernel; prediction routes
rows through the kernel's tree walker. The flat representation (parallel
``feature``/``threshold``/``left``/``right``/``value`` arrays, node 0 the
root, ``left == -1`` marking leaves) is what both kernel backends consume
and what model serialization stores.

Split acceptance: a node splits whenever its labels are not constant and a
structurally valid candidate exists, even if the best candidate's impurity
gain is zero. Zero-gain splits are what let depth-2 trees carve XOR-shaped
label patterns: the first cut earns nothing by itself but exposes pure
children to the next level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kernels

IMPURITY_CODES = {
    "variance": kernels.IMPURITY_VARIANCE,
    "gini": kernels.IMPURITY_GINI,
}


@dataclass(frozen=True, eq=False)
class Tree:
    """A fitted tree as parallel flat arrays."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    @property
    def n_leaves(self) -> int:
        return int((self.left == -1).sum())

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        return kernels.tree_predict(
            self.feature, self.threshold, self.left, self.right, self.value, X
        )

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "Tree":
        return cls(
            feature=np.asarray(obj["feature"], dtype=np.int32),
            threshold=np.asarray(obj["threshold"], dtype=np.float64),
            left=np.asarray(obj["left"], dtype=np.int32),
            right=np.asarray(obj["right"], dtype=np.int32),
            value=np.asarray(obj["value"], dtype=np.float64),
        )


def _sample_columns(n_cols: int, max_features: int | None, rng: np.random.Generator | None):
    if max_features is None or max_features >= n_cols:
        return np.arange(n_cols, dtype=np.int64)
    if rng is None:
        raise ValueError("feature subsampling requires an rng")
    chosen = rng.choice(n_cols, size=max_features, replace=False)
    return np.sort(chosen).astype(np.int64)


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    impurity: str,
    max_depth: int | None,
    min_samples_leaf: int = 1,
    max_features: int | None = None,
    rng: np.random.Generator | None = None,
) -> Tree:
    """Fit one tree. Leaf values are label means over the leaf's rows.

    Nodes are created depth-first, left child before right, so any rng draws
    for feature subsampling happen in a schedule-independent order.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    impurity_code = IMPURITY_CODES[impurity]
    n_cols = X.shape[1]

    features: list[int] = []
    thresholds: list[float] = []
    lefts: list[int] = []
    rights: list[int] = []
    values: list[float] = []

    def new_node(rows: np.ndarray) -> int:
        index = len(features)
        features.append(-1)
        thresholds.append(0.0)
        lefts.append(-1)
        rights.append(-1)
        values.append(float(y[rows].mean()))
        return index

    def build(rows: np.ndarray, depth: int) -> int:
        index = new_node(rows)
        if max_depth is not None and depth >= max_depth:
            return index
        if rows.size < 2 * min_samples_leaf:
            return index
        y_node = y[rows]
        if np.all(y_node == y_node[0]):
            return index
        columns = _sample_columns(n_cols, max_features, rng)
        col, thr, _gain = kernels.best_split_kernel(
            X[rows], y_node, columns, impurity_code, min_samples_leaf
        )
        if col < 0:
            return index
        mask = X[rows, col] <= thr
        left_rows = rows[mask]
        right_rows = rows[~mask]
        if left_rows.size == 0 or right_rows.size == 0:
            return index
        features[index] = col
        thresholds[index] = thr
        lefts[index] = build(left_rows, depth + 1)
        rights[index] = build(right_rows, depth + 1)
        return index

    build(np.arange(X.shape[0]), 0)
    return Tree(
        feature=np.asarray(features, dtype=np.int32),
        threshold=np.asarray(thresholds, dtype=np.float64),
        left=np.asarray(lefts, dtype=np.int32),
        right=np.asarray(rights, dtype=np.int32),
        value=np.asarray(values, dtype=np.float64),
    )
