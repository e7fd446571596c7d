"""Boosted ensembles: discrete AdaBoost over stumps and first-order
gradient-boosted trees.

AdaBoost stumps are fit by exhaustive weighted search (the weights change
every round, so the unweighted split kernel does not apply). GBT reuses the
shared CART machinery, fitting each round's tree to the loss's negative
gradient and moving predictions by learning_rate times the tree output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linear import sigmoid
from .tree import Tree, grow_tree

WEIGHT_EPS = 1e-10

LOSS_SQUARED = "squared"
LOSS_LOGISTIC = "logistic"


@dataclass(frozen=True)
class Stump:
    """Depth-1 classifier: label_left where x[column] <= threshold, else label_right.

    ``column == -1`` encodes the degenerate no-split stump that answers
    label_left everywhere.
    """

    column: int
    threshold: float
    label_left: int
    label_right: int

    def predict(self, X: np.ndarray) -> np.ndarray:
        if self.column < 0:
            return np.full(X.shape[0], float(self.label_left))
        return np.where(
            X[:, self.column] <= self.threshold,
            float(self.label_left),
            float(self.label_right),
        )


def _majority(w_ones: np.ndarray, w_zeros: np.ndarray, tie_class: int) -> np.ndarray:
    labels = np.where(w_ones > w_zeros, 1, 0)
    return np.where(w_ones == w_zeros, tie_class, labels)


def fit_weighted_stump(X: np.ndarray, y: np.ndarray, weights: np.ndarray, tie_class: int) -> Stump:
    """Exhaustive search for the stump minimizing weighted misclassification.

    Ties break toward the lowest column, then the lowest threshold. When no
    column offers two distinct values the stump degenerates to the weighted
    majority class.
    """
    n, d = X.shape
    w_total = float(weights.sum())
    w1_total = float((weights * y).sum())
    w0_total = w_total - w1_total

    best_err = np.inf
    best: Stump | None = None
    for col in range(d):
        order = np.argsort(X[:, col], kind="stable")
        xs = X[order, col]
        boundary = xs[1:] != xs[:-1]
        if not boundary.any():
            continue
        cw = np.cumsum(weights[order])[:-1]
        cw1 = np.cumsum((weights * y)[order])[:-1]
        left_ones = cw1
        left_zeros = cw - cw1
        right_ones = w1_total - left_ones
        right_zeros = w0_total - left_zeros
        err = (
            np.minimum(left_ones, left_zeros) + np.minimum(right_ones, right_zeros)
        )
        err = np.where(boundary, err, np.inf)
        i = int(np.argmin(err))
        if err[i] < best_err:
            best_err = float(err[i])
            threshold = (float(xs[i]) + float(xs[i + 1])) * 0.5
            label_left = int(_majority(left_ones[i : i + 1], left_zeros[i : i + 1], tie_class)[0])
            label_right = int(
                _majority(right_ones[i : i + 1], right_zeros[i : i + 1], tie_class)[0]
            )
            best = Stump(col, threshold, label_left, label_right)

    if best is None:
        label = int(_majority(np.array([w1_total]), np.array([w0_total]), tie_class)[0])
        return Stump(-1, 0.0, label, label)
    return best


def train_adaboost(
    X: np.ndarray, y: np.ndarray, n_rounds: int
) -> tuple[list[Stump], list[float], list[np.ndarray]]:
    """Discrete AdaBoost. Returns (stumps, alphas, per-round weight vectors).

    A stump with zero weighted error ends training early with its weight
    capped at log((1 - eps) / eps), eps = 1e-10. A stump no better than
    chance ends training too: it is kept with weight 0 only if it is the
    only one.
    """
    n = X.shape[0]
    tie_class = int(y[0])
    weights = np.full(n, 1.0 / n)
    stumps: list[Stump] = []
    alphas: list[float] = []
    weight_history: list[np.ndarray] = []

    for _ in range(n_rounds):
        stump = fit_weighted_stump(X, y, weights, tie_class)
        miss = stump.predict(X) != y
        err = float(weights[miss].sum())
        if err <= 0.0:
            stumps.append(stump)
            alphas.append(float(np.log((1.0 - WEIGHT_EPS) / WEIGHT_EPS)))
            weight_history.append(weights.copy())
            break
        if err >= 0.5:
            if not stumps:
                stumps.append(stump)
                alphas.append(0.0)
                weight_history.append(weights.copy())
            break
        alpha = float(np.log((1.0 - err) / err))
        stumps.append(stump)
        alphas.append(alpha)
        weights = weights * np.exp(alpha * miss)
        weights = weights / weights.sum()
        weight_history.append(weights.copy())
    return stumps, alphas, weight_history


def adaboost_predict_proba(
    stumps: list[Stump], alphas: list[float], X: np.ndarray
) -> np.ndarray:
    """Class-1 probability as the alpha-weighted vote share."""
    total = float(sum(alphas))
    if total <= 0.0:
        return np.full(X.shape[0], 0.5)
    votes = np.zeros(X.shape[0])
    for stump, alpha in zip(stumps, alphas):
        votes += alpha * stump.predict(X)
    return votes / total


def gbt_loss(scores: np.ndarray, y: np.ndarray, loss: str) -> float:
    """Training loss under either GBT objective (for monitoring and tests)."""
    if loss == LOSS_SQUARED:
        residual = y - scores
        return float(residual @ residual) / y.shape[0]
    if loss == LOSS_LOGISTIC:
        return float(np.mean(np.logaddexp(0.0, scores) - y * scores))
    raise ValueError(f"unknown loss {loss!r}")


def gbt_negative_gradient(scores: np.ndarray, y: np.ndarray, loss: str) -> np.ndarray:
    if loss == LOSS_SQUARED:
        return y - scores
    if loss == LOSS_LOGISTIC:
        return y - sigmoid(scores)
    raise ValueError(f"unknown loss {loss!r}")


def gbt_initial_score(y: np.ndarray, loss: str) -> float:
    if loss == LOSS_SQUARED:
        return float(y.mean())
    if loss == LOSS_LOGISTIC:
        rate = float(np.clip(y.mean(), 1e-10, 1.0 - 1e-10))
        return float(np.log(rate / (1.0 - rate)))
    raise ValueError(f"unknown loss {loss!r}")


def gbt_round(
    scores: np.ndarray,
    X: np.ndarray,
    y: np.ndarray,
    loss: str,
    max_depth: int | None,
    min_samples_leaf: int,
    learning_rate: float,
) -> tuple[Tree, np.ndarray]:
    """One boosting round: fit a tree to the negative gradient, step along it."""
    residual = gbt_negative_gradient(scores, y, loss)
    tree = grow_tree(X, residual, "variance", max_depth, min_samples_leaf)
    updated = scores + learning_rate * tree.predict(X)
    return tree, updated


def train_gbt(
    X: np.ndarray,
    y: np.ndarray,
    loss: str,
    n_rounds: int,
    max_depth: int | None,
    min_samples_leaf: int,
    learning_rate: float,
) -> tuple[float, list[Tree]]:
    f0 = gbt_initial_score(y, loss)
    scores = np.full(X.shape[0], f0)
    trees: list[Tree] = []
    for _ in range(n_rounds):
        tree, scores = gbt_round(scores, X, y, loss, max_depth, min_samples_leaf, learning_rate)
        trees.append(tree)
    return f0, trees


def gbt_predict_scores(f0: float, trees: list[Tree], learning_rate: float, X: np.ndarray) -> np.ndarray:
    scores = np.full(X.shape[0], f0)
    for tree in trees:
        scores = scores + learning_rate * tree.predict(X)
    return scores
