"""Tests for the public split-search interface."""

from __future__ import annotations

import numpy as np
import pytest

from photocensus.models import SplitDecision, best_split


def column(values):
    return np.asarray(values, dtype=np.float64).reshape(-1, 1)


class TestBestSplit:
    def test_gini_hand_oracle(self):
        # Candidates 1.5 / 2.5 / 3.5; only 2.5 separates the classes fully:
        # parent gini 0.5, children pure, gain 0.5.
        decision = best_split(column([1, 2, 3, 4]), np.array([0.0, 0.0, 1.0, 1.0]), impurity="gini")
        assert decision == SplitDecision(column=0, threshold=2.5, gain=0.5)

    def test_variance_hand_oracle(self):
        # Parent variance 25 (values 0,0,10,10); split at 1.5 zeroes both sides.
        decision = best_split(
            column([0, 1, 2, 3]), np.array([0.0, 0.0, 10.0, 10.0]), impurity="variance"
        )
        assert decision == SplitDecision(column=0, threshold=1.5, gain=25.0)

    def test_constant_labels_none(self):
        assert best_split(column([1, 2, 3]), np.array([4.0, 4.0, 4.0])) is None

    def test_identical_features_differing_labels_none(self):
        assert best_split(column([5, 5]), np.array([0.0, 1.0]), impurity="gini") is None

    def test_tie_breaks_to_lowest_column(self):
        X = np.hstack([column([1, 2, 3, 4]), column([1, 2, 3, 4])])
        decision = best_split(X, np.array([0.0, 0.0, 1.0, 1.0]), impurity="gini")
        assert decision.column == 0

    def test_tie_breaks_to_lowest_threshold(self):
        # Both 1.5 and 2.5 give gain 1/9 on this symmetric pattern.
        decision = best_split(column([1, 2, 3]), np.array([0.0, 1.0, 0.0]), impurity="gini")
        assert decision.threshold == 1.5

    def test_threshold_is_midpoint_of_distinct_values(self):
        decision = best_split(column([0, 0, 10, 10]), np.array([0.0, 0.0, 1.0, 1.0]), impurity="gini")
        assert decision.threshold == 5.0

    def test_min_samples_leaf_filters_candidates(self):
        X = column([1, 2, 3, 4])
        y = np.array([0.0, 1.0, 1.0, 1.0])
        unrestricted = best_split(X, y, impurity="gini")
        assert unrestricted.threshold == 1.5
        restricted = best_split(X, y, impurity="gini", min_samples_leaf=2)
        assert restricted.threshold == 2.5

    def test_column_restriction(self):
        X = np.hstack([column([1, 2, 3, 4]), column([4, 3, 2, 1])])
        decision = best_split(X, np.array([0.0, 0.0, 1.0, 1.0]), columns=[1], impurity="gini")
        assert decision.column == 1

    def test_too_few_rows(self):
        with pytest.raises(ValueError):
            best_split(column([1]), np.array([0.0]))

    def test_unknown_impurity(self):
        with pytest.raises(ValueError):
            best_split(column([1, 2]), np.array([0.0, 1.0]), impurity="entropy")

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            best_split(column([1, 2]), np.array([0.0, 1.0, 0.0]))

    def test_gain_always_positive_when_present(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            X = rng.integers(0, 4, size=(20, 3)).astype(np.float64)
            y = rng.integers(0, 2, size=20).astype(np.float64)
            decision = best_split(X, y, impurity="gini")
            if decision is not None:
                assert decision.gain > 0.0
