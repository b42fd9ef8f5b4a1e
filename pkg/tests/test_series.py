from datetime import date

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regimecast.errors import EmptySeriesError, GapError, ParameterError, RangeError
from regimecast.series import (
    DailySeries,
    PeriodSpec,
    moving_average,
    series_from_csv,
    series_to_csv,
    slice_periods,
    summarize,
)


def make(values, start=date(2020, 1, 1)):
    return DailySeries(start, np.asarray(values, dtype=float))


class TestMovingAverage:
    def test_constant_series_is_preserved(self):
        out = moving_average(make([5, 5, 5, 5]), 3)
        assert out.values == pytest.approx([5, 5, 5, 5])

    def test_window_larger_than_series_rejected(self):
        with pytest.raises(ParameterError):
            moving_average(make([5, 5, 5, 5]), 7)

    def test_full_week_mean(self):
        out = moving_average(make([1, 2, 3, 4, 5, 6, 7]), 7)
        assert out.values[-1] == pytest.approx(4.0)

    def test_warmup_uses_short_window(self):
        out = moving_average(make([1, 2, 3, 4, 5, 6, 7]), 7)
        assert out.values[0] == pytest.approx(1.0)
        assert out.values[2] == pytest.approx(2.0)

    def test_window_one_is_identity(self):
        values = [3.5, -1.0, 2.2, 9.9]
        out = moving_average(make(values), 1)
        assert out.values == pytest.approx(values)

    def test_bad_window(self):
        with pytest.raises(ParameterError):
            moving_average(make([1, 2, 3]), 0)

    @given(st.integers(1, 12), st.integers(0, 2 ** 31 - 1))
    @settings(max_examples=40, deadline=None)
    def test_linearity(self, window, seed):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=15)
        y = rng.normal(size=15)
        a, b = 2.5, -1.25
        lhs = moving_average(make(a * x + b * y), window).values
        rhs = a * moving_average(make(x), window).values \
            + b * moving_average(make(y), window).values
        assert lhs == pytest.approx(rhs, abs=1e-12)


class TestSlicePeriods:
    def test_paper_shaped_boundaries(self):
        s = make(np.arange(731.0), start=date(2019, 1, 1))
        spec = PeriodSpec(boundaries=(date(2020, 3, 18), date(2020, 5, 13)))
        parts = slice_periods(s, spec)
        assert [len(p) for p in parts] == [442, 56, 233]
        assert parts[0].end_date == date(2020, 3, 17)
        assert parts[1].start_date == date(2020, 3, 18)

    def test_no_boundaries_single_segment(self):
        s = make([1, 2, 3])
        parts = slice_periods(s, PeriodSpec(boundaries=()))
        assert len(parts) == 1
        assert parts[0].values == pytest.approx(s.values)

    def test_boundary_at_start_rejected(self):
        s = make([1, 2, 3])
        with pytest.raises(RangeError):
            slice_periods(s, PeriodSpec(boundaries=(date(2020, 1, 1),)))

    def test_boundary_outside_span_rejected(self):
        s = make([1, 2, 3])
        with pytest.raises(RangeError):
            slice_periods(s, PeriodSpec(boundaries=(date(2021, 1, 1),)))

    def test_segments_partition_series(self):
        rng = np.random.default_rng(3)
        s = make(rng.normal(size=60))
        spec = PeriodSpec(boundaries=(date(2020, 1, 11), date(2020, 2, 5)))
        parts = slice_periods(s, spec)
        rebuilt = np.concatenate([p.values for p in parts])
        assert rebuilt.tolist() == s.values.tolist()
        assert sum(len(p) for p in parts) == len(s)

    def test_weighted_mean_identity(self):
        rng = np.random.default_rng(4)
        s = make(rng.normal(100, 20, size=90))
        spec = PeriodSpec(boundaries=(date(2020, 2, 1),))
        parts = slice_periods(s, spec)
        weighted = sum(len(p) * summarize(p).mean for p in parts) / len(s)
        assert weighted == pytest.approx(summarize(s).mean, rel=1e-12)

    def test_unordered_boundaries_rejected(self):
        with pytest.raises(ParameterError):
            PeriodSpec(boundaries=(date(2020, 2, 1), date(2020, 1, 1)))


class TestSummarize:
    def test_simple_stats(self):
        out = summarize(make([2, 4, 6]))
        assert (out.n, out.mean, out.sd, out.median) == (3, 4.0, 2.0, 4.0)

    def test_single_value_has_no_sd(self):
        out = summarize(make([7]))
        assert out.mean == 7.0
        assert out.sd is None

    def test_constant_series_zero_sd(self):
        assert summarize(make([3, 3, 3, 3])).sd == 0.0

    def test_empty_rejected(self):
        with pytest.raises(EmptySeriesError):
            summarize(make([]))


class TestSeriesCsv:
    def test_round_trip(self):
        s = make([1.25, -3.0, 0.125], start=date(2020, 4, 9))
        again = series_from_csv(series_to_csv(s))
        assert again.start_date == s.start_date
        assert again.values.tolist() == s.values.tolist()

    def test_gap_detected(self):
        text = "date,value\n2020-01-01,1.0\n2020-01-03,2.0\n"
        with pytest.raises(GapError):
            series_from_csv(text)

    def test_json_round_trip(self):
        s = make([1.0, 2.0], start=date(2020, 4, 9))
        again = DailySeries.from_json_dict(s.to_json_dict())
        assert again.start_date == s.start_date
        assert again.values.tolist() == s.values.tolist()


def test_index_date_correspondence():
    s = make([0, 0, 0], start=date(2020, 12, 30))
    assert s.date_at(2) == date(2021, 1, 1)
    assert s.index_of(date(2020, 12, 31)) == 1
    with pytest.raises(RangeError):
        s.index_of(date(2021, 1, 2))
