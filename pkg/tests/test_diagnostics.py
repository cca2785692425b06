import io
from datetime import date, timedelta

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epipca import (
    ReferenceSeries,
    center_columns,
    compare_with_reference,
    join_by_week,
    load_reference_csv,
    spearman,
    tmode_outlier_flags,
    weighted_pca,
)
from epipca.errors import (
    DegenerateRanks,
    LengthMismatch,
    NoOverlap,
    TooFewStreams,
)
from helpers import make_matrix


class TestSpearman:
    def test_monotone_agreement(self):
        assert spearman([1, 2, 3], [10, 20, 30]) == 1.0

    def test_monotone_disagreement(self):
        assert spearman([1, 2, 3], [3, 2, 1]) == -1.0

    def test_gaussian_identity(self):
        # for bivariate normal data with Pearson correlation rho, the
        # population Spearman correlation is (6/pi) * asin(rho/2)
        rng = np.random.default_rng(11)
        z = rng.multivariate_normal([0, 0], [[1, 0.5], [0.5, 1]], size=1000)
        target = 6 / np.pi * np.arcsin(0.25)
        assert abs(spearman(z[:, 0], z[:, 1]) - target) < 0.07

    def test_ties_get_average_ranks(self):
        # a has a tie; hand-computed ranks: a -> (1.5, 1.5, 3), b -> (1, 2, 3)
        ra, rb = np.array([1.5, 1.5, 3.0]), np.array([1.0, 2.0, 3.0])
        expected = np.corrcoef(ra, rb)[0, 1]
        assert spearman([5, 5, 9], [1, 2, 3]) == pytest.approx(expected)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            spearman([1, 2, 3], [1, 2])
        with pytest.raises(LengthMismatch):
            spearman([1, 2], [1, 2])

    def test_degenerate_ranks(self):
        with pytest.raises(DegenerateRanks):
            spearman([1, 1, 1], [1, 2, 3])

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        a, b = rng.normal(size=40), rng.normal(size=40)
        assert spearman(a, b) == spearman(b, a)

    @settings(max_examples=30, deadline=None)
    @given(
        st.lists(
            st.integers(min_value=-10000, max_value=10000),
            min_size=4,
            max_size=30,
            unique=True,
        )
    )
    def test_invariant_under_increasing_transform(self, ints):
        a = np.asarray(ints, dtype=float) / 100.0
        rng = np.random.default_rng(len(a))
        b = rng.normal(size=len(a))
        base = spearman(a, b)
        assert spearman(np.exp(a / 100), b) == base
        assert spearman(a**3, b) == base


def weekly_reference(start: date, values, strata=None) -> ReferenceSeries:
    dates = tuple(start + timedelta(weeks=i) for i in range(len(values)))
    return ReferenceSeries(dates=dates, values=np.asarray(values, float), strata=strata)


class TestJoinByWeek:
    def test_week_containment(self):
        ref = weekly_reference(date(2020, 1, 6), [1.1], strata=("R>1",))
        days = [date(2020, 1, 6) + timedelta(days=i) for i in range(7)]
        rows = join_by_week(days, np.arange(7.0), ref)
        assert all(r.reference == 1.1 for r in rows)
        assert all(r.stratum == "R>1" for r in rows)

    def test_before_first_week_is_missing(self):
        ref = weekly_reference(date(2020, 1, 6), [1.1, 0.9])
        rows = join_by_week([date(2020, 1, 5), date(2020, 1, 6)], [1.0, 2.0], ref)
        assert rows[0].reference is None
        assert rows[0].stratum == "missing"
        assert rows[1].reference == 1.1

    def test_hand_enumerated_month(self):
        # 4 published weeks, one with no estimate; 30 daily scores
        start = date(2020, 3, 2)
        ref = ReferenceSeries(
            dates=(start, start + timedelta(weeks=1), start + timedelta(weeks=2), start + timedelta(weeks=3)),
            values=np.array([1.2, np.nan, 0.8, 1.0]),
            strata=("R>1", "missing", "R<1", "R=1"),
        )
        days = [date(2020, 3, 1) + timedelta(days=i) for i in range(30)]
        rows = join_by_week(days, np.zeros(30), ref)
        by_stratum = {}
        for r in rows:
            by_stratum[r.stratum] = by_stratum.get(r.stratum, 0) + 1
        # Mar 1 precedes week 1; each week covers 7 days; the NaN week
        # counts as missing; Mar 30 falls after week 4 ends (Mar 29)
        assert by_stratum == {"missing": 1 + 7 + 1, "R>1": 7, "R<1": 7, "R=1": 7}

    def test_gap_after_last_week_is_missing(self):
        ref = weekly_reference(date(2020, 1, 6), [1.0])
        rows = join_by_week([date(2020, 1, 6), date(2020, 1, 20)], [0.0, 1.0], ref)
        assert rows[1].reference is None

    def test_no_overlap(self):
        ref = weekly_reference(date(2021, 1, 4), [1.0])
        with pytest.raises(NoOverlap):
            join_by_week([date(2020, 1, 1)], [1.0], ref)

    def test_daily_reference_matches_same_date(self):
        days = tuple(date(2020, 1, 1) + timedelta(days=i) for i in range(10))
        ref = ReferenceSeries(dates=days, values=np.arange(10.0))
        rows = join_by_week(days, np.zeros(10), ref)
        assert [r.reference for r in rows] == list(np.arange(10.0))


class TestCompareWithReference:
    def make_result(self, n=30, p=3, seed=0):
        rng = np.random.default_rng(seed)
        trend = np.linspace(0, 4, n).reshape(-1, 1)
        values = trend @ rng.normal(size=(1, p)) + 0.05 * rng.normal(size=(n, p))
        m = make_matrix(values, start=date(2020, 1, 6))
        return weighted_pca(center_columns(m), mode="S")

    def test_self_comparison_is_one(self):
        result = self.make_result()
        scores = result.scores[:, 0]
        ref = ReferenceSeries(dates=result.dates, values=scores.copy())
        report = compare_with_reference(result, 0, ref)
        assert report.spearman_rho == 1.0
        assert report.n_matched == len(result.dates)

    def test_stratum_count_invariants(self):
        result = self.make_result()
        # weekly reference covering only part of the score range
        ref = ReferenceSeries(
            dates=(date(2020, 1, 13), date(2020, 1, 20)),
            values=np.array([1.5, 0.5]),
            strata=("R>1", "R<1"),
        )
        report = compare_with_reference(result, 0, ref)
        assert len(report.joined_table) == report.n_matched
        non_missing = sum(
            c for s, c in report.per_stratum_counts.items() if s != "missing"
        )
        assert non_missing == report.n_matched
        assert report.n_matched + report.per_stratum_counts["missing"] == len(result.dates)
        assert len(report.stratified) == len(result.dates)

    def test_tmode_rejected(self):
        rng = np.random.default_rng(5)
        m = make_matrix(rng.normal(size=(10, 4)))
        result = weighted_pca(center_columns(m), mode="T")
        ref = weekly_reference(date(2020, 4, 2), [1.0])
        with pytest.raises(ValueError):
            compare_with_reference(result, 0, ref)


class TestReferenceCsv:
    def test_strata_rules(self):
        text = (
            "week_start,lower,upper\n"
            "2020-05-01,1.1,1.4\n"
            "2020-05-08,0.6,0.9\n"
            "2020-05-15,0.9,1.2\n"
            "2020-05-22,,\n"
        )
        ref = load_reference_csv(io.StringIO(text))
        assert ref.strata == ("R>1", "R<1", "R=1", "missing")
        assert np.isnan(ref.values[3])
        assert ref.values[0] == 1.4  # compares against the upper bound

    def test_rows_sorted(self):
        text = "week_start,lower,upper\n2020-05-08,1,1\n2020-05-01,1,1\n"
        ref = load_reference_csv(io.StringIO(text))
        assert ref.dates[0] == date(2020, 5, 1)


class TestTmodeOutliers:
    def make_tmode_result(self, scores_row):
        """Build a T-mode result whose PC1 scores are controlled."""
        rng = np.random.default_rng(42)
        n = 40
        base = np.sin(np.linspace(0, 3 * np.pi, n))
        base = base - base.mean()
        # stream j = scores_j * unit-norm trend, so T-mode PC1 scores ~ scores_j
        values = np.outer(base / np.linalg.norm(base), np.asarray(scores_row))
        values += 1e-9 * rng.normal(size=values.shape)
        m = make_matrix(values, labels=tuple(f"s{j}" for j in range(len(scores_row))))
        return weighted_pca(center_columns(m), mode="T")

    def test_gross_outlier_flagged(self):
        result = self.make_tmode_result([0.1, -0.1, 0.05, 9.0])
        flags = tmode_outlier_flags(result, 0)
        flagged = [f.label for f in flags if f.flagged]
        assert flagged == ["s3"]
        assert flags[0].label == "s3"  # ordered by deviation

    def test_equal_scores_none_flagged(self):
        rng = np.random.default_rng(1)
        m = make_matrix(rng.normal(size=(12, 5)))
        result = weighted_pca(center_columns(m), mode="T")
        constant = result.scores.copy()
        constant[:, 0] = 2.5
        from dataclasses import replace

        equal = replace(result, scores=constant)
        assert not any(f.flagged for f in tmode_outlier_flags(equal, 0))

    def test_too_few_streams(self):
        rng = np.random.default_rng(2)
        m = make_matrix(rng.normal(size=(10, 3)))
        result = weighted_pca(center_columns(m), mode="T")
        with pytest.raises(TooFewStreams):
            tmode_outlier_flags(result, 0)

    def test_smode_rejected(self):
        rng = np.random.default_rng(3)
        m = make_matrix(rng.normal(size=(10, 4)))
        with pytest.raises(ValueError):
            tmode_outlier_flags(weighted_pca(center_columns(m), mode="S"), 0)

    def test_shift_and_scale_invariance(self):
        from dataclasses import replace

        result = self.make_tmode_result([0.3, -0.2, 0.1, 6.0, -0.15])
        base = [f.flagged for f in tmode_outlier_flags(result, 0)]
        shifted = replace(result, scores=result.scores + 100.0)
        scaled = replace(result, scores=result.scores * 42.0)
        assert [f.flagged for f in tmode_outlier_flags(shifted, 0)] == base
        assert [f.flagged for f in tmode_outlier_flags(scaled, 0)] == base
