"""Model evaluation: the four metrics, repeated k-fold CV, and the
train-on-one-survey / test-on-the-other protocol.

Fold assignments are derived deterministically from the plan's master seed
(repeat r uses the stream seeded by (seed, r)), so a report is reproducible
from its plan echo alone. Standard deviations are population-style (divide
by N) over all n_folds x n_repeats scores.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .features import Dataset
from .models import LearnerSpec, Model, classify, fit, predict


def metric_mse(y: np.ndarray, y_hat: np.ndarray) -> float:
    """Mean squared residual."""
    y, y_hat = _aligned(y, y_hat)
    residual = y - y_hat
    return float(residual @ residual) / y.shape[0]


def metric_r2(y: np.ndarray, y_hat: np.ndarray) -> float:
    """1 - SS_res / SS_tot; undefined (an error) for constant y."""
    y, y_hat = _aligned(y, y_hat)
    if y.shape[0] < 2:
        raise ValueError("R2 needs at least 2 samples")
    centered = y - y.mean()
    ss_tot = float(centered @ centered)
    if ss_tot == 0.0:
        raise ValueError("R2 is undefined for constant targets")
    residual = y - y_hat
    return 1.0 - float(residual @ residual) / ss_tot


def metric_accuracy(y: np.ndarray, y_hat: np.ndarray) -> float:
    y, y_hat = _aligned(y, y_hat)
    _require_binary(y, y_hat)
    return float((y == y_hat).mean())


def metric_f1(y: np.ndarray, y_hat: np.ndarray) -> float:
    """F1 for positive class 1; defined as 0 when precision + recall = 0."""
    y, y_hat = _aligned(y, y_hat)
    _require_binary(y, y_hat)
    tp = float(((y == 1) & (y_hat == 1)).sum())
    fp = float(((y == 0) & (y_hat == 1)).sum())
    fn = float(((y == 1) & (y_hat == 0)).sum())
    if 2 * tp + fp + fn == 0.0:
        return 0.0
    return 2 * tp / (2 * tp + fp + fn)


METRICS = {
    "mse": metric_mse,
    "r2": metric_r2,
    "accuracy": metric_accuracy,
    "f1": metric_f1,
}

# These two score hard {0,1} labels (classify at 0.5); the rest score the
# raw predict() output.
LABEL_METRICS = frozenset({"accuracy", "f1"})


def _aligned(y, y_hat) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if y.shape != y_hat.shape or y.ndim != 1:
        raise ValueError(f"mismatched metric inputs: {y.shape} vs {y_hat.shape}")
    if y.shape[0] == 0:
        raise ValueError("metrics need at least one sample")
    return y, y_hat


def _require_binary(*arrays: np.ndarray) -> None:
    for arr in arrays:
        if not np.isin(arr, (0.0, 1.0)).all():
            raise ValueError("classification metrics need labels in {0, 1}")


@dataclass(frozen=True)
class CvPlan:
    n_folds: int = 10
    n_repeats: int = 10
    stratified: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.n_folds < 2:
            raise ValueError("n_folds must be at least 2")
        if self.n_repeats < 1:
            raise ValueError("n_repeats must be at least 1")


def split_folds(n_samples: int, labels: np.ndarray | None, plan: CvPlan) -> np.ndarray:
    """Fold id per sample per repeat, shape (n_repeats, n_samples).

    Plain repeats shuffle and cut into near-equal folds. Stratified repeats
    deal each class's shuffled indices round-robin, with a rotating offset
    between classes so remainders spread across folds; per-fold class counts
    land within one sample of proportional.
    """
    if n_samples < plan.n_folds:
        raise DataError(f"{n_samples} samples cannot fill {plan.n_folds} folds")
    if plan.stratified and labels is None:
        raise DataError("stratified folds need labels")

    assignment = np.empty((plan.n_repeats, n_samples), dtype=np.int64)
    for repeat in range(plan.n_repeats):
        rng = np.random.default_rng(np.random.SeedSequence([plan.seed, repeat]))
        if not plan.stratified:
            perm = rng.permutation(n_samples)
            base = n_samples // plan.n_folds
            extra = n_samples % plan.n_folds
            start = 0
            for fold in range(plan.n_folds):
                size = base + (1 if fold < extra else 0)
                assignment[repeat, perm[start : start + size]] = fold
                start += size
        else:
            label_array = np.asarray(labels)
            offset = 0
            for value in np.unique(label_array):
                idx = np.nonzero(label_array == value)[0]
                idx = rng.permutation(idx)
                folds = (np.arange(idx.shape[0]) + offset) % plan.n_folds
                assignment[repeat, idx] = folds
                offset = (offset + idx.shape[0]) % plan.n_folds
    return assignment


@dataclass(frozen=True, eq=False)
class EvalReport:
    """Scores per metric, raw and summarized, with plan and spec echoes."""

    spec: LearnerSpec
    plan: CvPlan | None
    metric_names: tuple[str, ...]
    scores: dict
    mean: dict
    std: dict

    def summary_line(self, metric: str) -> str:
        return f"{metric}: {self.mean[metric]:.4f} +/- {self.std[metric]:.4f}"


def _summarize(
    spec: LearnerSpec, plan: CvPlan | None, metric_names, scores: dict
) -> EvalReport:
    mean = {name: float(np.mean(scores[name])) for name in metric_names}
    std = {name: float(np.std(scores[name])) for name in metric_names}
    return EvalReport(
        spec=spec,
        plan=plan,
        metric_names=tuple(metric_names),
        scores={name: np.asarray(scores[name]) for name in metric_names},
        mean=mean,
        std=std,
    )


def _score(model: Model, test: Dataset, metric_names) -> dict:
    raw = predict(model, test.matrix)
    out = {}
    labels_cache = None
    for name in metric_names:
        if name in LABEL_METRICS:
            if labels_cache is None:
                labels_cache = classify(model, test.matrix, 0.5)
            out[name] = METRICS[name](test.labels, labels_cache)
        else:
            out[name] = METRICS[name](test.labels, raw)
    return out


def _check_metrics(metric_names) -> None:
    unknown = [name for name in metric_names if name not in METRICS]
    if unknown:
        raise ValueError(f"unknown metrics {unknown}; valid: {sorted(METRICS)}")
    if not metric_names:
        raise ValueError("at least one metric is required")


def cross_validate(
    spec: LearnerSpec, dataset: Dataset, plan: CvPlan, metric_names
) -> EvalReport:
    """Repeated k-fold CV: one score per (repeat, fold) per metric.

    Each fold's model is fit on that fold's training rows only, so its
    standardization and imputation statistics never see test rows.
    """
    _check_metrics(metric_names)
    labels = dataset.labels if plan.stratified else None
    assignment = split_folds(dataset.n_rows, labels, plan)
    scores: dict = {name: [] for name in metric_names}
    for repeat in range(plan.n_repeats):
        for fold in range(plan.n_folds):
            test_mask = assignment[repeat] == fold
            train_idx = np.nonzero(~test_mask)[0]
            test_idx = np.nonzero(test_mask)[0]
            try:
                model = fit(spec, dataset.subset(train_idx))
                fold_scores = _score(model, dataset.subset(test_idx), metric_names)
            except Exception as exc:
                raise DataError(f"evaluation failed at repeat {repeat}, fold {fold}: {exc}") from exc
            for name in metric_names:
                scores[name].append(fold_scores[name])
    return _summarize(spec, plan, metric_names, scores)


def cross_dataset_eval(
    spec: LearnerSpec, train: Dataset, test: Dataset, metric_names
) -> EvalReport:
    """Fit once on one survey, score on the other; no pooling of statistics."""
    _check_metrics(metric_names)
    if train.schema != test.schema:
        raise DataError("train and test datasets use different schemas")
    model = fit(spec, train)
    fold_scores = _score(model, test, metric_names)
    scores = {name: [fold_scores[name]] for name in metric_names}
    return _summarize(spec, None, metric_names, scores)


def report_to_json(report: EvalReport) -> str:
    obj = {
        "spec": {
            "kind": report.spec.kind,
            "hyperparameters": dict(report.spec.hyperparameters),
            "seed": report.spec.seed,
        },
        "plan": None
        if report.plan is None
        else {
            "n_folds": report.plan.n_folds,
            "n_repeats": report.plan.n_repeats,
            "stratified": report.plan.stratified,
            "seed": report.plan.seed,
        },
        "metrics": {
            name: {
                "mean": report.mean[name],
                "std": report.std[name],
                "scores": report.scores[name].tolist(),
            }
            for name in report.metric_names
        },
    }
    return json.dumps(obj, indent=2)
