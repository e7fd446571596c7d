"""Tests for metrics, fold splitting, and the two evaluation protocols."""

from __future__ import annotations

import json

import numpy as np
import pytest

from photocensus.errors import DataError
from photocensus.evaluation import (
    CvPlan,
    cross_dataset_eval,
    cross_validate,
    metric_accuracy,
    metric_f1,
    metric_mse,
    metric_r2,
    report_to_json,
    split_folds,
)
from photocensus.features import Dataset, FeatureSchema
from photocensus.models import LearnerSpec, fit


def make_dataset(matrix, labels) -> Dataset:
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim == 1:
        matrix = matrix.reshape(-1, 1)
    names = tuple(f"f{j}" for j in range(matrix.shape[1]))
    schema = FeatureSchema(names=names, sources=("raw",) * matrix.shape[1])
    return Dataset(
        matrix=matrix,
        labels=np.asarray(labels, dtype=np.float64),
        schema=schema,
        column_means=matrix.mean(axis=0),
    )


def regression_dataset(seed: int, n: int = 60) -> Dataset:
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 3))
    y = X[:, 0] - 2.0 * X[:, 1] + 0.2 * rng.normal(size=n)
    return make_dataset(X, y)


def classification_dataset(seed: int, n: int = 60) -> Dataset:
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 3))
    y = (X[:, 0] + 0.3 * rng.normal(size=n) > 0).astype(np.float64)
    return make_dataset(X, y)


class TestMetrics:
    def test_mse_examples(self):
        assert metric_mse([1, 2], [1, 2]) == 0.0
        assert metric_mse([0, 0], [1, 1]) == 1.0
        assert metric_mse([0, 2], [1, 1]) == 1.0

    def test_r2_perfect(self):
        assert metric_r2([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 1.0

    def test_r2_mean_predictor_zero(self):
        y = [1.0, 2.0, 3.0]
        assert metric_r2(y, [2.0, 2.0, 2.0]) == 0.0

    def test_r2_hand_oracle(self):
        # SS_res = 1 + 1 = 2; SS_tot = 0.25 + 0.25 = 0.5; 1 - 4 = -3.
        assert metric_r2([0.0, 1.0], [1.0, 0.0]) == -3.0

    def test_r2_constant_target_rejected(self):
        with pytest.raises(ValueError):
            metric_r2([2.0, 2.0], [1.0, 3.0])

    def test_accuracy(self):
        assert metric_accuracy([0, 1, 1, 0], [0, 1, 1, 0]) == 1.0
        assert metric_accuracy([0, 1, 1, 0], [0, 1, 0, 0]) == 0.75

    def test_f1_all_correct(self):
        assert metric_f1([0, 1, 1], [0, 1, 1]) == 1.0

    def test_f1_zero_when_no_positives_predicted(self):
        assert metric_f1([1, 1, 0], [0, 0, 0]) == 0.0

    def test_f1_hand_oracle(self):
        # tp=1, fp=1, fn=1: precision = recall = 0.5, F1 = 0.5.
        assert metric_f1([1, 0, 1], [1, 1, 0]) == 0.5

    def test_binary_enforced(self):
        with pytest.raises(ValueError):
            metric_accuracy([0.0, 0.5], [0.0, 1.0])
        with pytest.raises(ValueError):
            metric_f1([0, 1], [0, 2])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            metric_mse([1.0], [1.0, 2.0])


class TestSplitFolds:
    def test_partition_each_repeat(self):
        plan = CvPlan(n_folds=10, n_repeats=10, seed=5)
        assignment = split_folds(100, None, plan)
        assert assignment.shape == (10, 100)
        for repeat in range(10):
            counts = np.bincount(assignment[repeat], minlength=10)
            assert counts.sum() == 100
            assert counts.tolist() == [10] * 10

    def test_every_sample_tested_once_per_repeat(self):
        plan = CvPlan(n_folds=4, n_repeats=3, seed=0)
        assignment = split_folds(21, None, plan)
        for repeat in range(3):
            sizes = np.bincount(assignment[repeat], minlength=4)
            assert sizes.sum() == 21
            assert sizes.max() - sizes.min() <= 1

    def test_stratified_even_classes(self):
        labels = np.array([0, 1] * 50)
        plan = CvPlan(n_folds=10, n_repeats=2, stratified=True, seed=1)
        assignment = split_folds(100, labels, plan)
        for repeat in range(2):
            for fold in range(10):
                members = labels[assignment[repeat] == fold]
                assert (members == 0).sum() == 5
                assert (members == 1).sum() == 5

    def test_stratified_ratio_within_one(self):
        rng = np.random.default_rng(2)
        labels = (rng.random(53) < 0.3).astype(int)
        plan = CvPlan(n_folds=5, n_repeats=3, stratified=True, seed=2)
        assignment = split_folds(53, labels, plan)
        for repeat in range(3):
            for value in (0, 1):
                per_fold = [
                    (labels[assignment[repeat] == fold] == value).sum() for fold in range(5)
                ]
                assert max(per_fold) - min(per_fold) <= 1

    def test_deterministic(self):
        plan = CvPlan(n_folds=5, n_repeats=4, seed=9)
        a = split_folds(40, None, plan)
        b = split_folds(40, None, plan)
        assert np.array_equal(a, b)
        c = split_folds(40, None, CvPlan(n_folds=5, n_repeats=4, seed=10))
        assert not np.array_equal(a, c)

    def test_too_few_samples(self):
        with pytest.raises(DataError):
            split_folds(5, None, CvPlan(n_folds=10))

    def test_stratified_requires_labels(self):
        with pytest.raises(DataError):
            split_folds(20, None, CvPlan(n_folds=2, stratified=True))

    def test_plan_validation(self):
        with pytest.raises(ValueError):
            CvPlan(n_folds=1)
        with pytest.raises(ValueError):
            CvPlan(n_repeats=0)


class TestCrossValidate:
    def test_mean_baseline_r2_never_positive(self):
        dataset = regression_dataset(3)
        plan = CvPlan(n_folds=5, n_repeats=2, seed=3)
        report = cross_validate(LearnerSpec("mean_baseline"), dataset, plan, ["r2"])
        assert (report.scores["r2"] <= 0.0).all()
        assert report.mean["r2"] <= 0.0

    def test_score_count_and_summary_consistency(self):
        dataset = regression_dataset(4, n=24)
        plan = CvPlan(n_folds=2, n_repeats=1, seed=0)
        report = cross_validate(LearnerSpec("mean_baseline"), dataset, plan, ["mse", "r2"])
        assert report.scores["mse"].shape == (2,)
        for name in ("mse", "r2"):
            assert report.mean[name] == pytest.approx(float(np.mean(report.scores[name])))
            assert report.std[name] == pytest.approx(
                float(np.std(report.scores[name])), abs=1e-12
            )

    def test_deterministic_reports(self):
        dataset = classification_dataset(5)
        plan = CvPlan(n_folds=4, n_repeats=2, stratified=True, seed=11)
        spec = LearnerSpec("random_forest", {"n_trees": 5}, seed=2)
        a = cross_validate(spec, dataset, plan, ["accuracy", "f1"])
        b = cross_validate(spec, dataset, plan, ["accuracy", "f1"])
        assert np.array_equal(a.scores["accuracy"], b.scores["accuracy"])
        assert np.array_equal(a.scores["f1"], b.scores["f1"])

    def test_real_learner_beats_baseline(self):
        dataset = regression_dataset(6, n=80)
        plan = CvPlan(n_folds=5, n_repeats=2, seed=4)
        gbt = cross_validate(
            LearnerSpec("gbt_regressor", {"n_rounds": 40}), dataset, plan, ["r2"]
        )
        base = cross_validate(LearnerSpec("mean_baseline"), dataset, plan, ["r2"])
        assert gbt.mean["r2"] > base.mean["r2"]
        assert gbt.mean["r2"] > 0.5

    def test_no_leakage_in_fold_standardization(self):
        dataset = classification_dataset(7, n=40)
        plan = CvPlan(n_folds=4, n_repeats=1, stratified=True, seed=6)
        assignment = split_folds(dataset.n_rows, dataset.labels, plan)
        for fold in range(4):
            train_idx = np.nonzero(assignment[0] != fold)[0]
            model = fit(LearnerSpec("knn"), dataset.subset(train_idx))
            train_matrix = dataset.matrix[train_idx]
            assert np.array_equal(model.scale_means, train_matrix.mean(axis=0))
            expected_stds = train_matrix.std(axis=0)
            expected_stds = np.where(expected_stds == 0.0, 1.0, expected_stds)
            assert np.array_equal(model.scale_stds, expected_stds)

    def test_fold_errors_annotated(self):
        dataset = make_dataset(np.arange(8.0), [0.0, 1.0] * 4)
        plan = CvPlan(n_folds=2, n_repeats=1, seed=0)
        with pytest.raises(DataError, match="repeat 0, fold 0"):
            # R2 over a 4-sample fold of a {0,1} target can be computed, but
            # asking for R2 of a *constant* fold fails; force it with a
            # constant label vector.
            cross_validate(
                LearnerSpec("mean_baseline"),
                make_dataset(np.arange(8.0), [1.0] * 8),
                plan,
                ["r2"],
            )

    def test_unknown_metric(self):
        with pytest.raises(ValueError, match="rmse"):
            cross_validate(
                LearnerSpec("mean_baseline"), regression_dataset(8), CvPlan(), ["rmse"]
            )


class TestCrossDataset:
    def test_train_equals_test_degenerate(self):
        dataset = classification_dataset(9, n=50)
        spec = LearnerSpec("decision_tree", {"max_depth": 3})
        report = cross_dataset_eval(spec, dataset, dataset, ["accuracy"])
        model = fit(spec, dataset)
        from photocensus.models import classify

        direct = metric_accuracy(dataset.labels, classify(model, dataset.matrix, 0.5))
        assert report.scores["accuracy"].tolist() == [direct]
        assert report.plan is None

    def test_mean_baseline_gap_closed_form(self):
        train = make_dataset([[0.0], [0.0]], [1.0, 3.0])
        test = make_dataset([[0.0], [0.0]], [0.0, 4.0])
        report = cross_dataset_eval(LearnerSpec("mean_baseline"), train, test, ["mse"])
        # Train mean is 2; residuals on test are (-2, 2); MSE = 4.
        assert report.scores["mse"].tolist() == [4.0]

    def test_schema_mismatch(self):
        a = make_dataset([[0.0]], [1.0])
        schema_b = FeatureSchema(names=("other",), sources=("raw",))
        b = Dataset(
            matrix=np.zeros((1, 1)),
            labels=np.ones(1),
            schema=schema_b,
            column_means=np.zeros(1),
        )
        with pytest.raises(DataError, match="schema"):
            cross_dataset_eval(LearnerSpec("mean_baseline"), a, b, ["mse"])


class TestReportJson:
    def test_report_serializes(self):
        dataset = regression_dataset(10, n=20)
        plan = CvPlan(n_folds=2, n_repeats=2, seed=1)
        report = cross_validate(LearnerSpec("mean_baseline"), dataset, plan, ["mse"])
        payload = json.loads(report_to_json(report))
        assert payload["spec"]["kind"] == "mean_baseline"
        assert payload["plan"]["n_folds"] == 2
        assert len(payload["metrics"]["mse"]["scores"]) == 4
        assert payload["metrics"]["mse"]["mean"] == pytest.approx(report.mean["mse"])
