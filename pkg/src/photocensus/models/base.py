"""The uniform learner contract: specs, fitting, prediction, serialization.

Every learner kind fits through :func:`fit` and answers through
:func:`predict`; classification kinds return class-1 probabilities and gain
:func:`classify`. Models carry their training column statistics so that
missing values and standardization replay identically at predict time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ..errors import DataError
from ..features import Dataset
from . import baselines, boosting, forest, linear, neighbors
from .tree import Tree, grow_tree

MODEL_FORMAT_VERSION = "1"

DEFAULT_HYPERPARAMETERS: dict[str, dict] = {
    "mean_baseline": {},
    "mode_baseline": {},
    "elastic_net": {"l1": 0.01, "l2": 0.01, "max_sweeps": 1000, "tol": 1e-6},
    "logistic_regression": {"step": 0.1, "max_iters": 5000, "tol": 1e-8},
    "knn": {"k": 5},
    "decision_tree": {"max_depth": 6, "min_samples_leaf": 2},
    "random_forest": {
        "n_trees": 100,
        "max_depth": 6,
        "min_samples_leaf": 2,
        "max_features": "sqrt",
        "bootstrap": True,
    },
    "adaboost": {"n_rounds": 50},
    "gbt_regressor": {
        "n_rounds": 100,
        "max_depth": 3,
        "min_samples_leaf": 1,
        "learning_rate": 0.1,
    },
    "gbt_classifier": {
        "n_rounds": 100,
        "max_depth": 3,
        "min_samples_leaf": 1,
        "learning_rate": 0.1,
    },
}

KINDS = tuple(sorted(DEFAULT_HYPERPARAMETERS))

REGRESSION_KINDS = frozenset({"mean_baseline", "elastic_net", "gbt_regressor"})
CLASSIFICATION_KINDS = frozenset(KINDS) - REGRESSION_KINDS

# Scale-sensitive learners see zero-mean unit-variance columns; tree-based
# learners consume raw values.
STANDARDIZED_KINDS = frozenset({"elastic_net", "logistic_regression", "knn"})


@dataclass(frozen=True)
class LearnerSpec:
    """A learner kind with fully resolved hyperparameters and a seed."""

    kind: str
    hyperparameters: Mapping = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in DEFAULT_HYPERPARAMETERS:
            raise ValueError(f"unknown learner kind {self.kind!r}; valid kinds: {list(KINDS)}")
        defaults = DEFAULT_HYPERPARAMETERS[self.kind]
        unknown = set(self.hyperparameters) - set(defaults)
        if unknown:
            raise ValueError(f"unknown hyperparameters for {self.kind}: {sorted(unknown)}")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        filled = dict(defaults)
        filled.update(self.hyperparameters)
        object.__setattr__(self, "hyperparameters", filled)

    @property
    def is_classifier(self) -> bool:
        return self.kind in CLASSIFICATION_KINDS


@dataclass(frozen=True, eq=False)
class Model:
    """A fitted learner: spec, learned state, and training column stats."""

    spec: LearnerSpec
    n_features: int
    impute_means: np.ndarray
    scale_means: np.ndarray
    scale_stds: np.ndarray
    state: dict

    @property
    def is_classifier(self) -> bool:
        return self.spec.is_classifier


def _column_stats(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    stds = np.where(stds == 0.0, 1.0, stds)
    return means, stds


def _standardize(X: np.ndarray, means: np.ndarray, stds: np.ndarray) -> np.ndarray:
    return (X - means) / stds


def fit(spec: LearnerSpec, dataset: Dataset) -> Model:
    """Train a model. Deterministic given (spec.seed, dataset)."""
    if dataset.n_rows == 0:
        raise DataError("cannot fit on an empty dataset")
    X = np.ascontiguousarray(dataset.matrix, dtype=np.float64)
    y = np.ascontiguousarray(dataset.labels, dtype=np.float64)
    if np.isnan(X).any():
        raise DataError("dataset still contains missing values")
    if spec.is_classifier and not np.isin(y, (0.0, 1.0)).all():
        raise DataError(f"{spec.kind} requires labels in {{0, 1}}")

    impute_means = X.mean(axis=0)
    scale_means, scale_stds = _column_stats(X)
    if spec.kind in STANDARDIZED_KINDS:
        X_fit = _standardize(X, scale_means, scale_stds)
    else:
        X_fit = X

    hp = spec.hyperparameters
    state: dict
    if spec.kind == "mean_baseline":
        state = {"mean": baselines.fit_mean(y)}
    elif spec.kind == "mode_baseline":
        state = {"mode": baselines.fit_mode(y)}
    elif spec.kind == "elastic_net":
        weights, intercept = linear.fit_elastic_net(
            X_fit, y, hp["l1"], hp["l2"], hp["max_sweeps"], hp["tol"]
        )
        state = {"weights": weights, "intercept": intercept}
    elif spec.kind == "logistic_regression":
        weights, intercept = linear.fit_logistic(X_fit, y, hp["step"], hp["max_iters"], hp["tol"])
        state = {"weights": weights, "intercept": intercept}
    elif spec.kind == "knn":
        state = {"points": X_fit.copy(), "labels": y.copy()}
    elif spec.kind == "decision_tree":
        tree = grow_tree(X_fit, y, "gini", hp["max_depth"], hp["min_samples_leaf"])
        state = {"tree": tree}
    elif spec.kind == "random_forest":
        trees = forest.train_forest(
            X_fit,
            y,
            "gini",
            hp["n_trees"],
            hp["max_depth"],
            hp["min_samples_leaf"],
            hp["max_features"],
            hp["bootstrap"],
            spec.seed,
        )
        state = {"trees": trees}
    elif spec.kind == "adaboost":
        stumps, alphas, _ = boosting.train_adaboost(X_fit, y, hp["n_rounds"])
        state = {"stumps": stumps, "alphas": alphas}
    elif spec.kind in ("gbt_regressor", "gbt_classifier"):
        loss = boosting.LOSS_SQUARED if spec.kind == "gbt_regressor" else boosting.LOSS_LOGISTIC
        f0, trees = boosting.train_gbt(
            X_fit, y, loss, hp["n_rounds"], hp["max_depth"], hp["min_samples_leaf"], hp["learning_rate"]
        )
        state = {"f0": f0, "trees": trees}
    else:  # unreachable: LearnerSpec validates kind
        raise AssertionError(spec.kind)

    return Model(
        spec=spec,
        n_features=X.shape[1],
        impute_means=impute_means,
        scale_means=scale_means,
        scale_stds=scale_stds,
        state=state,
    )


def predict(model: Model, matrix: np.ndarray) -> np.ndarray:
    """Predictions per row: raw reals for regression kinds, class-1
    probability in [0, 1] for classification kinds."""
    X = np.asarray(matrix, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DataError(
            f"matrix has shape {X.shape}, model expects (*, {model.n_features})"
        )
    X = np.where(np.isnan(X), model.impute_means, X)
    if model.spec.kind in STANDARDIZED_KINDS:
        X = _standardize(X, model.scale_means, model.scale_stds)
    X = np.ascontiguousarray(X)

    kind = model.spec.kind
    state = model.state
    hp = model.spec.hyperparameters
    if kind == "mean_baseline":
        return np.full(X.shape[0], state["mean"])
    if kind == "mode_baseline":
        return np.full(X.shape[0], float(state["mode"]))
    if kind in ("elastic_net", "logistic_regression"):
        z = X @ state["weights"] + state["intercept"]
        return linear.sigmoid(z) if kind == "logistic_regression" else z
    if kind == "knn":
        return neighbors.knn_predict(state["points"], state["labels"], X, hp["k"])
    if kind == "decision_tree":
        return state["tree"].predict(X)
    if kind == "random_forest":
        return forest.forest_predict(state["trees"], X)
    if kind == "adaboost":
        return boosting.adaboost_predict_proba(state["stumps"], state["alphas"], X)
    if kind in ("gbt_regressor", "gbt_classifier"):
        scores = boosting.gbt_predict_scores(state["f0"], state["trees"], hp["learning_rate"], X)
        return linear.sigmoid(scores) if kind == "gbt_classifier" else scores
    raise AssertionError(kind)


def classify(model: Model, matrix: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    """Hard {0,1} labels: 1 iff probability >= threshold."""
    if not model.is_classifier:
        raise DataError(f"{model.spec.kind} is a regression kind; classify needs probabilities")
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be inside (0, 1), got {threshold}")
    probabilities = predict(model, matrix)
    return (probabilities >= threshold).astype(np.int64)


def _state_to_json(kind: str, state: dict) -> dict:
    if kind in ("mean_baseline", "mode_baseline"):
        return dict(state)
    if kind in ("elastic_net", "logistic_regression"):
        return {"weights": state["weights"].tolist(), "intercept": state["intercept"]}
    if kind == "knn":
        return {"points": state["points"].tolist(), "labels": state["labels"].tolist()}
    if kind == "decision_tree":
        return {"tree": state["tree"].to_dict()}
    if kind == "random_forest":
        return {"trees": [tree.to_dict() for tree in state["trees"]]}
    if kind == "adaboost":
        return {
            "stumps": [
                [stump.column, stump.threshold, stump.label_left, stump.label_right]
                for stump in state["stumps"]
            ],
            "alphas": list(state["alphas"]),
        }
    if kind in ("gbt_regressor", "gbt_classifier"):
        return {"f0": state["f0"], "trees": [tree.to_dict() for tree in state["trees"]]}
    raise AssertionError(kind)


def _state_from_json(kind: str, obj: dict) -> dict:
    if kind in ("mean_baseline", "mode_baseline"):
        return dict(obj)
    if kind in ("elastic_net", "logistic_regression"):
        return {"weights": np.asarray(obj["weights"], dtype=np.float64), "intercept": obj["intercept"]}
    if kind == "knn":
        return {
            "points": np.asarray(obj["points"], dtype=np.float64),
            "labels": np.asarray(obj["labels"], dtype=np.float64),
        }
    if kind == "decision_tree":
        return {"tree": Tree.from_dict(obj["tree"])}
    if kind == "random_forest":
        return {"trees": [Tree.from_dict(t) for t in obj["trees"]]}
    if kind == "adaboost":
        return {
            "stumps": [boosting.Stump(int(c), float(t), int(l), int(r)) for c, t, l, r in obj["stumps"]],
            "alphas": [float(a) for a in obj["alphas"]],
        }
    if kind in ("gbt_regressor", "gbt_classifier"):
        return {"f0": obj["f0"], "trees": [Tree.from_dict(t) for t in obj["trees"]]}
    raise AssertionError(kind)


def model_to_json(model: Model) -> str:
    """Serialize to JSON. Floats survive exactly (shortest-repr encoding)."""
    obj = {
        "version": MODEL_FORMAT_VERSION,
        "kind": model.spec.kind,
        "hyperparameters": dict(model.spec.hyperparameters),
        "seed": model.spec.seed,
        "n_features": model.n_features,
        "column_stats": {
            "impute_means": model.impute_means.tolist(),
            "scale_means": model.scale_means.tolist(),
            "scale_stds": model.scale_stds.tolist(),
        },
        "state": _state_to_json(model.spec.kind, model.state),
    }
    return json.dumps(obj)


def model_from_json(text: str) -> Model:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"model payload is not valid JSON: {exc.msg}") from exc
    if obj.get("version") != MODEL_FORMAT_VERSION:
        raise DataError(f"unsupported model format version {obj.get('version')!r}")
    spec = LearnerSpec(kind=obj["kind"], hyperparameters=obj["hyperparameters"], seed=obj["seed"])
    stats = obj["column_stats"]
    return Model(
        spec=spec,
        n_features=int(obj["n_features"]),
        impute_means=np.asarray(stats["impute_means"], dtype=np.float64),
        scale_means=np.asarray(stats["scale_means"], dtype=np.float64),
        scale_stds=np.asarray(stats["scale_stds"], dtype=np.float64),
        state=_state_from_json(obj["kind"], obj["state"]),
    )


def save_model(model: Model, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(model_to_json(model))
        handle.write("\n")


def load_model(path: str) -> Model:
    with open(path, "r", encoding="utf-8") as handle:
        return model_from_json(handle.read())
