"""The learner zoo: a uniform fit/predict contract over ten model kinds.

Regression kinds (mean_baseline, elastic_net, gbt_regressor) predict raw
reals; classification kinds (mode_baseline, logistic_regression, knn,
decision_tree, random_forest, adaboost, gbt_classifier) predict class-1
probabilities and support :func:`classify`.
"""

from .base import (
    CLASSIFICATION_KINDS,
    DEFAULT_HYPERPARAMETERS,
    KINDS,
    MODEL_FORMAT_VERSION,
    REGRESSION_KINDS,
    STANDARDIZED_KINDS,
    LearnerSpec,
    Model,
    classify,
    fit,
    load_model,
    model_from_json,
    model_to_json,
    predict,
    save_model,
)
from .boosting import gbt_round
from .split import SplitDecision, best_split
from .tree import Tree, grow_tree

__all__ = [
    "CLASSIFICATION_KINDS",
    "DEFAULT_HYPERPARAMETERS",
    "KINDS",
    "MODEL_FORMAT_VERSION",
    "REGRESSION_KINDS",
    "STANDARDIZED_KINDS",
    "LearnerSpec",
    "Model",
    "SplitDecision",
    "Tree",
    "best_split",
    "classify",
    "fit",
    "gbt_round",
    "grow_tree",
    "load_model",
    "model_from_json",
    "model_to_json",
    "predict",
    "save_model",
]
