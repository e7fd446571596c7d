"""Linear learners: elastic net by coordinate descent, logistic regression
by batch gradient descent.

Both expect standardized feature columns (the caller handles that) and fit
an unpenalized intercept.
"""

from __future__ import annotations

import numpy as np


def elastic_net_objective(
    X: np.ndarray, y: np.ndarray, weights: np.ndarray, intercept: float, l1: float, l2: float
) -> float:
    """0.5 * MSE + l1 * ||w||_1 + 0.5 * l2 * ||w||_2^2."""
    residual = y - X @ weights - intercept
    mse = float(residual @ residual) / X.shape[0]
    return 0.5 * mse + l1 * float(np.abs(weights).sum()) + 0.5 * l2 * float(weights @ weights)


def _soft_threshold(z: float, gamma: float) -> float:
    if z > gamma:
        return z - gamma
    if z < -gamma:
        return z + gamma
    return 0.0


def fit_elastic_net(
    X: np.ndarray, y: np.ndarray, l1: float, l2: float, max_sweeps: int, tol: float
) -> tuple[np.ndarray, float]:
    """Cyclic coordinate descent on the elastic-net objective.

    Each coordinate update is the exact minimizer for that coordinate, so
    the objective never increases. Stops when no coefficient (intercept
    included) moved by more than ``tol`` in a full sweep.
    """
    n, d = X.shape
    weights = np.zeros(d)
    intercept = float(y.mean())
    residual = y - intercept  # residual excludes nothing: y - Xw - b with w = 0
    col_sq = (X * X).sum(axis=0) / n

    for _ in range(max_sweeps):
        max_change = 0.0
        for j in range(d):
            if col_sq[j] == 0.0:
                continue
            w_old = weights[j]
            rho = float(X[:, j] @ residual) / n + col_sq[j] * w_old
            w_new = _soft_threshold(rho, l1) / (col_sq[j] + l2)
            if w_new != w_old:
                residual -= (w_new - w_old) * X[:, j]
                weights[j] = w_new
                max_change = max(max_change, abs(w_new - w_old))
        b_shift = float(residual.mean())
        if b_shift != 0.0:
            intercept += b_shift
            residual -= b_shift
            max_change = max(max_change, abs(b_shift))
        if max_change < tol:
            break
    return weights, intercept


def sigmoid(z: np.ndarray) -> np.ndarray:
    # Evaluated through exp(-|z|) so neither branch overflows.
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_loss_and_grad(
    X: np.ndarray, y: np.ndarray, weights: np.ndarray, intercept: float
) -> tuple[float, np.ndarray, float]:
    """Mean cross-entropy and its gradient in (weights, intercept)."""
    z = X @ weights + intercept
    # log(1 + e^z) - y*z, computed stably.
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    p = sigmoid(z)
    grad_w = X.T @ (p - y) / X.shape[0]
    grad_b = float(np.mean(p - y))
    return loss, grad_w, grad_b


def fit_logistic(
    X: np.ndarray, y: np.ndarray, step: float, max_iters: int, tol: float
) -> tuple[np.ndarray, float]:
    """Full-batch gradient descent; stops when the loss change drops below tol."""
    weights = np.zeros(X.shape[1])
    intercept = 0.0
    previous = np.inf
    for _ in range(max_iters):
        loss, grad_w, grad_b = logistic_loss_and_grad(X, y, weights, intercept)
        if abs(previous - loss) < tol:
            break
        previous = loss
        weights = weights - step * grad_w
        intercept = intercept - step * grad_b
    return weights, intercept
