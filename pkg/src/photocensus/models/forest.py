"""Random forest: bagged CART trees with per-node feature subsampling."""

from __future__ import annotations

import numpy as np

from .tree import Tree, grow_tree


def resolve_max_features(max_features, n_cols: int) -> int | None:
    """Translate the max_features setting into a column count.

    "sqrt" takes floor(sqrt(n_cols)) (at least 1); None means all columns;
    an integer is used as given, capped at n_cols.
    """
    if max_features is None:
        return None
    if max_features == "sqrt":
        return max(1, int(np.sqrt(n_cols)))
    count = int(max_features)
    if count < 1:
        raise ValueError(f"max_features must be at least 1, got {max_features!r}")
    return min(count, n_cols)


def train_forest(
    X: np.ndarray,
    y: np.ndarray,
    impurity: str,
    n_trees: int,
    max_depth: int | None,
    min_samples_leaf: int,
    max_features,
    bootstrap: bool,
    seed: int,
) -> list[Tree]:
    """Fit the ensemble. Tree t draws its rng from (seed, t), so training
    is reproducible and trees are independent of fit order."""
    n = X.shape[0]
    per_node = resolve_max_features(max_features, X.shape[1])
    trees: list[Tree] = []
    for t in range(n_trees):
        rng = np.random.default_rng(np.random.SeedSequence([seed, t]))
        if bootstrap:
            rows = rng.integers(0, n, size=n)
            X_t, y_t = X[rows], y[rows]
        else:
            X_t, y_t = X, y
        trees.append(
            grow_tree(
                X_t,
                y_t,
                impurity,
                max_depth,
                min_samples_leaf,
                max_features=per_node,
                rng=rng,
            )
        )
    return trees


def forest_predict(trees: list[Tree], X: np.ndarray) -> np.ndarray:
    total = np.zeros(X.shape[0])
    for tree in trees:
        total += tree.predict(X)
    return total / len(trees)
