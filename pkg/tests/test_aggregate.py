import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ipsbench.aggregate import (
    AggregationError,
    MetricMatrix,
    aggregate_metric,
    aggregate_scenarios,
    aggregate_trials,
    atomic_write,
    error_stats,
    normalize_to_baseline,
    read_aggregate_csv,
    read_raw_csv,
    summary_markdown,
    weighted_combine,
    write_aggregate_csv,
    write_raw_csv,
    write_summary_csv,
)


class TestErrorStats:
    def test_known_values(self):
        stats = error_stats([1.0, 2.0, 3.0, 4.0], floor_hits=[True, True, False, True])
        assert stats["mean"] == 2.5
        assert stats["median"] == 2.5
        assert stats["p75"] == 3.25  # linear interpolation between 3 and 4
        assert stats["rmse"] == pytest.approx(math.sqrt(30 / 4))
        assert stats["floor_hit_rate"] == 0.75

    def test_empty_rejected(self):
        with pytest.raises(AggregationError):
            error_stats([])


class TestPipelinePieces:
    def test_trial_average(self):
        assert aggregate_trials([1.0, 2.0, 6.0]) == 3.0

    def test_baseline_ratio(self):
        assert normalize_to_baseline(3.0, 4.0) == 0.75
        with pytest.raises(AggregationError, match="not positive"):
            normalize_to_baseline(1.0, 0.0)

    def test_cross_scenario_stats(self):
        mean, std = aggregate_scenarios([1.0, 2.0, 3.0])
        assert mean == 2.0
        assert std == pytest.approx(1.0)  # sample std, ddof=1

    def test_single_scenario_std_is_zero(self):
        assert aggregate_scenarios([1.7]) == (1.7, 0.0)

    @given(st.lists(st.floats(0.1, 100.0), min_size=1, max_size=20))
    def test_baseline_normalizes_to_one(self, values):
        base = aggregate_trials(values)
        assert normalize_to_baseline(base, base) == pytest.approx(1.0)


class TestWeightedCombine:
    def test_transforms(self):
        score = weighted_combine(
            {"a": 2.0, "b": 3.0, "c": 0.25},
            {"a": 1.0, "b": 0.5, "c": 2.0},
            {"b": "square", "c": "one_minus"},
        )
        assert score == pytest.approx(1.0 * 2.0 + 0.5 * 9.0 + 2.0 * 0.75)

    def test_identity_default(self):
        assert weighted_combine({"a": 4.0}, {"a": 0.5}) == 2.0

    def test_errors(self):
        with pytest.raises(AggregationError, match="nonzero weight"):
            weighted_combine({"a": 1.0}, {"a": 0.0})
        with pytest.raises(AggregationError, match="missing"):
            weighted_combine({"a": 1.0}, {"b": 1.0})
        with pytest.raises(AggregationError, match="unknown transform"):
            weighted_combine({"a": 1.0}, {"a": 1.0}, {"a": "cube"})


def demo_matrix():
    m = MetricMatrix("epsilon_3d")
    for trial, v in enumerate([4.0, 6.0], start=1):
        m.record("base", "s1", trial, v)  # mean 5
    for trial, v in enumerate([10.0, 10.0], start=1):
        m.record("base", "s2", trial, v)  # mean 10
    for trial, v in enumerate([2.0, 3.0], start=1):
        m.record("fast", "s1", trial, v)  # mean 2.5 -> 0.5
    for trial, v in enumerate([15.0, 15.0], start=1):
        m.record("fast", "s2", trial, v)  # mean 15 -> 1.5
    return m


class TestAggregateMetric:
    def test_full_pipeline(self):
        agg = aggregate_metric(demo_matrix(), baseline="base")
        assert agg.per_scenario_mean[("fast", "s1")] == 2.5
        assert agg.per_scenario_normalized[("fast", "s1")] == 0.5
        assert agg.per_scenario_normalized[("fast", "s2")] == 1.5
        mean, std = agg.cross_scenario["fast"]
        assert mean == 1.0
        assert std == pytest.approx(np.std([0.5, 1.5], ddof=1))

    def test_baseline_identity(self):
        agg = aggregate_metric(demo_matrix(), baseline="base")
        assert agg.cross_scenario["base"] == (1.0, 0.0)

    def test_unknown_baseline(self):
        with pytest.raises(AggregationError, match="unknown baseline"):
            aggregate_metric(demo_matrix(), baseline="nope")

    def test_missing_baseline_scenario(self):
        m = MetricMatrix("tau")
        m.record("base", "s1", 1, 1.0)
        m.record("fast", "s1", 1, 1.0)
        m.record("fast", "s2", 1, 1.0)
        with pytest.raises(AggregationError, match="no value for scenario"):
            aggregate_metric(m, baseline="base")

    def test_non_finite_rejected_at_record(self):
        m = MetricMatrix("tau")
        with pytest.raises(AggregationError, match="non-finite"):
            m.record("base", "s1", 1, float("nan"))


class TestCsvRoundTrip:
    def test_raw(self, tmp_path):
        path = tmp_path / "raw.csv"
        write_raw_csv([demo_matrix()], path)
        (matrix,) = read_raw_csv(path)
        assert matrix.values == demo_matrix().values

    def test_aggregate_and_summary(self, tmp_path):
        agg = aggregate_metric(demo_matrix(), baseline="base")
        agg_path = tmp_path / "aggregate.csv"
        write_aggregate_csv([agg], agg_path)
        loaded = read_aggregate_csv(agg_path)
        assert loaded["epsilon_3d"][("fast", "s1")] == (2.5, 0.5)
        write_summary_csv([agg], tmp_path / "summary.csv")
        text = (tmp_path / "summary.csv").read_text()
        assert text.startswith("metric,method,cross_mean,cross_std\n")
        assert "epsilon_3d,base,1.0,0.0" in text

    def test_header_validation(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(AggregationError, match="header"):
            read_raw_csv(bad)

    def test_malformed_value_reports_row(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("metric,method,scenario,trial,value\ne,m,s,1,ok\n")
        with pytest.raises(AggregationError, match="row 2"):
            read_raw_csv(bad)

    def test_merge_multiple_files(self, tmp_path):
        m1 = MetricMatrix("tau")
        m1.record("base", "s1", 1, 1.0)
        m2 = MetricMatrix("tau")
        m2.record("base", "s2", 1, 2.0)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_raw_csv([m1], p1)
        write_raw_csv([m2], p2)
        (merged,) = read_raw_csv([p1, p2])
        assert merged.scenarios() == ["s1", "s2"]


def test_atomic_write_leaves_no_temp_files(tmp_path):
    target = tmp_path / "out" / "file.txt"
    atomic_write(target, "hello")
    assert target.read_text() == "hello"
    assert [p.name for p in target.parent.iterdir()] == ["file.txt"]


def test_summary_markdown_layout():
    agg = aggregate_metric(demo_matrix(), baseline="base")
    text = summary_markdown([agg])
    lines = text.splitlines()
    assert lines[0] == "| method | epsilon_3d |"
    assert "| base | 1.00 (0.00) |" in lines
    assert "| fast | 1.00 (0.71) |" in lines
