"""Tests for the capture-recapture estimator."""

from __future__ import annotations

import numpy as np
import pytest

from photocensus.bias import make_share_estimate
from photocensus.encounter import EncounterMatrix, matrix_from_histories
from photocensus.errors import DataError
from photocensus.jolly_seber import (
    ESTIMATE_CSV_HEADER,
    REASON_FIRST,
    REASON_LAST,
    REASON_ZERO_MARKED,
    REASON_ZERO_RECAPTURES,
    VARIANT_BIAS_CORRECTED,
    VARIANT_CLASSIC,
    OccasionStatistics,
    apply_bias_to_counts,
    jolly_seber_estimate,
    lincoln_petersen,
    occasion_statistics,
    write_population_estimates,
)

FIXTURE_HISTORIES = {"A": "101", "B": "110", "C": "011", "D": "111", "E": "010"}


def fixture_matrix() -> EncounterMatrix:
    return matrix_from_histories(FIXTURE_HISTORIES, occasions=(1, 2, 3))


def random_matrix(rng, n_rows, n_cols) -> EncounterMatrix:
    raw = rng.integers(0, 2, size=(n_rows, n_cols))
    # every row must encounter something, and drop empty matrices
    raw[raw.sum(axis=1) == 0, 0] = 1
    histories = {f"x{i}": "".join(str(v) for v in row) for i, row in enumerate(raw)}
    return matrix_from_histories(histories, occasions=tuple(range(1, n_cols + 1)))


class TestOccasionStatistics:
    def test_fixture_counts(self):
        stats = occasion_statistics(fixture_matrix())
        assert stats.occasions == (1, 2, 3)
        assert stats.captured == (3, 4, 3)
        assert stats.marked_recaptured == (0, 2, 3)
        assert stats.released == stats.captured
        assert stats.later_recaught == (3, 2, 0)
        assert stats.skipped == (0, 1, 0)

    def test_brute_force_recount(self):
        rng = np.random.default_rng(7)
        for trial in range(20):
            n = int(rng.integers(2, 51))
            t = int(rng.integers(2, 7))
            matrix = random_matrix(rng, n, t)
            stats = occasion_statistics(matrix)
            x = matrix.matrix
            for j in range(t):
                captured = marked = recaught = skipped = 0
                for i in range(x.shape[0]):
                    before = any(x[i, jj] for jj in range(j))
                    after = any(x[i, jj] for jj in range(j + 1, t))
                    if x[i, j]:
                        captured += 1
                        marked += before
                        recaught += after
                    elif before and after:
                        skipped += 1
                assert stats.captured[j] == captured
                assert stats.marked_recaptured[j] == marked
                assert stats.later_recaught[j] == recaught
                assert stats.skipped[j] == skipped

    def test_single_occasion_rejected(self):
        matrix = matrix_from_histories({"A": "1"}, occasions=(1,))
        with pytest.raises(DataError):
            occasion_statistics(matrix)

    def test_invariant_validation(self):
        with pytest.raises(ValueError):
            OccasionStatistics((1, 2), (1, 1), (0, 2), (1, 1), (0, 0), (0, 0))
        with pytest.raises(ValueError):
            OccasionStatistics((1, 2), (1, 1), (1, 0), (1, 1), (0, 0), (0, 0))


class TestJollySeber:
    def test_fixture_oracle_classic(self):
        est = jolly_seber_estimate(occasion_statistics(fixture_matrix()))
        first, middle, last = est.estimates
        assert first.marked_pop == 0.0
        assert middle.marked_pop == pytest.approx(4.0, abs=1e-12)
        assert middle.abundance == pytest.approx(8.0, abs=1e-12)
        assert first.survival == pytest.approx(4 / 3, abs=1e-12)

    def test_fixture_estimability(self):
        est = jolly_seber_estimate(occasion_statistics(fixture_matrix()))
        first, middle, last = est.estimates
        assert first.abundance is None and first.abundance_reason == REASON_FIRST
        assert last.abundance is None and last.abundance_reason == REASON_LAST
        assert last.marked_pop is None and last.marked_pop_reason == REASON_LAST
        assert middle.estimable and middle.abundance_reason is None
        # the 3-occasion study has no interior pair, so no recruitment
        assert all(e.recruitment is None for e in est.estimates)

    def test_fixture_bias_corrected(self):
        stats = occasion_statistics(fixture_matrix())
        est = jolly_seber_estimate(stats, VARIANT_BIAS_CORRECTED)
        middle = est.estimates[1]
        # m + (R+1)z/(r+1) = 2 + 5/3; (n+1)M/(m+1) = 5*(11/3)/3
        assert middle.marked_pop == pytest.approx(2 + 5 / 3, abs=1e-12)
        assert middle.abundance == pytest.approx(5 * (2 + 5 / 3) / 3, abs=1e-12)

    def test_variants_converge_at_scale(self):
        scale = 100
        stats = OccasionStatistics(
            occasions=(1, 2, 3),
            captured=(3 * scale, 4 * scale, 2 * scale),
            marked_recaptured=(0, 2 * scale, 2 * scale),
            released=(3 * scale, 4 * scale, 2 * scale),
            later_recaught=(3 * scale, 2 * scale, 0),
            skipped=(0, 1 * scale, 0),
        )
        classic = jolly_seber_estimate(stats, VARIANT_CLASSIC).estimates[1]
        corrected = jolly_seber_estimate(stats, VARIANT_BIAS_CORRECTED).estimates[1]
        assert classic.marked_pop / corrected.marked_pop == pytest.approx(1.0, abs=0.02)
        assert classic.abundance / corrected.abundance == pytest.approx(1.0, abs=0.02)

    def test_row_permutation_invariance(self):
        rng = np.random.default_rng(3)
        matrix = random_matrix(rng, 30, 5)
        base = jolly_seber_estimate(occasion_statistics(matrix))
        order = rng.permutation(len(matrix.individuals))
        shuffled = EncounterMatrix(
            individuals=tuple(matrix.individuals[i] for i in order),
            occasions=matrix.occasions,
            matrix=matrix.matrix[order],
        )
        assert jolly_seber_estimate(occasion_statistics(shuffled)).estimates == base.estimates

    def test_full_detection_recovers_truth(self):
        n, t = 23, 5
        histories = {f"a{i}": "1" * t for i in range(n)}
        matrix = matrix_from_histories(histories, occasions=tuple(range(1, t + 1)))
        est = jolly_seber_estimate(occasion_statistics(matrix))
        for row in est.estimates[1:-1]:
            assert row.abundance == float(n)
        for row in est.estimates[:-2]:
            assert row.survival == 1.0
        for row in est.estimates[1:-2]:
            assert row.recruitment == 0.0

    def test_interior_zero_recaptures(self):
        stats = occasion_statistics(
            matrix_from_histories({"A": "0100", "B": "1001"}, occasions=(1, 2, 3, 4))
        )
        classic_row = jolly_seber_estimate(stats, VARIANT_CLASSIC).estimates[1]
        assert classic_row.marked_pop is None
        assert classic_row.marked_pop_reason == REASON_ZERO_RECAPTURES
        assert classic_row.abundance_reason == REASON_ZERO_RECAPTURES
        corrected_row = jolly_seber_estimate(stats, VARIANT_BIAS_CORRECTED).estimates[1]
        assert corrected_row.marked_pop == pytest.approx(2.0)
        assert corrected_row.abundance == pytest.approx(4.0)

    def test_interior_zero_marked(self):
        stats = occasion_statistics(
            matrix_from_histories({"A": "0110", "B": "1001"}, occasions=(1, 2, 3, 4))
        )
        row = jolly_seber_estimate(stats, VARIANT_CLASSIC).estimates[1]
        assert row.marked_pop == pytest.approx(1.0)
        assert row.abundance is None
        assert row.abundance_reason == REASON_ZERO_MARKED

    def test_defined_estimates_respect_bounds(self):
        rng = np.random.default_rng(11)
        for trial in range(15):
            matrix = random_matrix(rng, int(rng.integers(5, 40)), int(rng.integers(3, 7)))
            est = jolly_seber_estimate(occasion_statistics(matrix))
            stats = occasion_statistics(matrix)
            for t, row in enumerate(est.estimates):
                if row.marked_pop is not None and t > 0:
                    assert row.marked_pop >= stats.marked_recaptured[t]
                if row.abundance is not None:
                    assert row.abundance >= stats.captured[t]
                if row.survival is not None:
                    assert row.survival >= 0.0

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            jolly_seber_estimate(occasion_statistics(fixture_matrix()), "petersen")

    def test_abundance_lookup(self):
        est = jolly_seber_estimate(occasion_statistics(fixture_matrix()))
        assert est.abundance_by_occasion() == {2: 8.0}
        assert est.for_occasion(2).captured == 4
        with pytest.raises(KeyError):
            est.for_occasion(1999)


class TestLincolnPetersen:
    def test_plain_oracle(self):
        assert lincoln_petersen(100, 50, 25) == 200.0

    def test_zero_recaptures(self):
        with pytest.raises(ValueError):
            lincoln_petersen(100, 50, 0)
        assert lincoln_petersen(100, 50, 0, chapman=True) == 101 * 51 / 1 - 1 == 5150.0

    def test_full_detection_identity(self):
        assert lincoln_petersen(37, 37, 37) == 37.0
        assert lincoln_petersen(37, 37, 37, chapman=True) == 37.0

    def test_invalid_counts(self):
        with pytest.raises(ValueError):
            lincoln_petersen(5, 10, 6)
        with pytest.raises(ValueError):
            lincoln_petersen(-1, 10, 0, chapman=True)


class TestApplyBias:
    def occasion_estimates(self, ks_by_occasion):
        out = []
        for occ, ks in ks_by_occasion.items():
            for i, k in enumerate(ks):
                out.append(make_share_estimate(f"c{occ}_{i}", occ, 1, 1.0 / k))
        return out

    def test_identity_at_k_one(self):
        matrix = fixture_matrix()
        estimates = self.occasion_estimates({1: [1.0], 2: [1.0], 3: [1.0]})
        assert apply_bias_to_counts(estimates, matrix) == occasion_statistics(matrix)

    def test_doubling(self):
        matrix = fixture_matrix()
        estimates = self.occasion_estimates({1: [2.0], 2: [2.0], 3: [2.0]})
        corrected = apply_bias_to_counts(estimates, matrix)
        assert corrected.captured == (6, 8, 6)
        assert corrected.released == corrected.captured
        observed = occasion_statistics(matrix)
        assert corrected.marked_recaptured == observed.marked_recaptured
        assert corrected.later_recaught == observed.later_recaught
        assert corrected.skipped == observed.skipped

    def test_half_up_rounding(self):
        matrix = matrix_from_histories({"A": "11", "B": "11", "C": "10"}, occasions=(1, 2))
        estimates = self.occasion_estimates({1: [1.5], 2: [1.5]})
        corrected = apply_bias_to_counts(estimates, matrix)
        # 3 * 1.5 = 4.5 rounds up to 5; 2 * 1.5 = 3
        assert corrected.captured == (5, 3)

    def test_occasion_mean_pools_collections(self):
        matrix = matrix_from_histories({"A": "11", "B": "11", "C": "10"}, occasions=(1, 2))
        estimates = self.occasion_estimates({1: [1.0, 2.0], 2: [1.0]})
        corrected = apply_bias_to_counts(estimates, matrix)
        assert corrected.captured[0] == 5  # 3 * mean(1, 2) = 4.5 -> 5

    def test_uncovered_occasion_rejected(self):
        matrix = fixture_matrix()
        estimates = self.occasion_estimates({1: [1.0], 2: [1.0]})
        with pytest.raises(DataError, match="3"):
            apply_bias_to_counts(estimates, matrix)

    def test_corrected_stats_feed_estimator(self):
        matrix = fixture_matrix()
        estimates = self.occasion_estimates({1: [2.0], 2: [2.0], 3: [2.0]})
        corrected = apply_bias_to_counts(estimates, matrix)
        est = jolly_seber_estimate(corrected)
        # M_2 = 2 + 8*1/2 = 6, N_2 = 8*6/2 = 24
        assert est.estimates[1].abundance == pytest.approx(24.0)


class TestCsvExport:
    def test_fixture_rows(self, tmp_path):
        est = jolly_seber_estimate(occasion_statistics(fixture_matrix()))
        path = tmp_path / "estimates.csv"
        write_population_estimates(est, str(path))
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(ESTIMATE_CSV_HEADER)
        assert lines[1] == "1,3,0,3,0,0.0,,1.3333333333333333,,0,first_occasion"
        assert lines[2] == "2,4,2,2,1,4.0,8.0,,,1,"
        assert lines[3] == "3,3,3,0,0,,,,,0,last_occasion"
