from datetime import datetime, timezone

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quotelag.errors import AlignmentError, ConfigurationError, DataError
from quotelag.quotegrid import (BARS_PER_WEEK, BarSeries, QuoteBar, align_pair, slice_weeks, to_datetime,
                                to_datetime64)

from conftest import STEP, T0, grid, make_series


def test_quote_bar_invariants():
    ts = datetime(2021, 1, 3, 0, 30, tzinfo=timezone.utc)
    QuoteBar(ts, 99, 101, 100, 102, 98, 101, 5.0)
    with pytest.raises(DataError):
        QuoteBar(ts, 101, 99, 100, 102, 98, 101)
    with pytest.raises(DataError):
        QuoteBar(ts, 99, 101, 100, 100.5, 98, 101)  # high below close
    with pytest.raises(DataError):
        QuoteBar(datetime(2021, 1, 3, 0, 10, tzinfo=timezone.utc), 99, 101, 100, 102, 98, 101)
    with pytest.raises(DataError):
        QuoteBar(ts, 99, 101, 100, 102, 98, 101, -1.0)


def test_uniform_series_rejects_silent_holes():
    s = make_series(np.linspace(100, 110, 10))
    keep = np.r_[0:4, 5:10]
    with pytest.raises(DataError):
        s.take(keep).replace(uniform=True)
    filled = s.take(keep).replace(uniform=False).with_gaps()
    assert len(filled) == 10 and filled.gap.tolist() == [i == 4 for i in range(10)]
    assert np.isnan(filled.bid[4])


def test_series_round_trips_through_bars():
    s = make_series(np.linspace(100, 110, 10))
    again = BarSeries.from_bars(s.asset, s.venue, s.bars)
    assert again == s


def test_align_identical_series():
    s = make_series(np.linspace(100, 110, 10))
    pair = align_pair(s, s)
    assert len(pair) == 10 and pair.dropped == {"local": 0, "global": 0}


def test_align_overlap():
    local = make_series(np.linspace(100, 110, 10))
    glob = make_series(np.linspace(100, 110, 10), start=T0 + 2 * STEP)
    pair = align_pair(local, glob)
    assert len(pair) == 8
    assert pair.grid[0] == local.timestamps[2] and pair.grid[-1] == local.timestamps[-1]
    assert pair.dropped == {"local": 2, "global": 2}


def test_align_excludes_gap_rows_like_a_set_intersection():
    rng = np.random.default_rng(0)
    local = make_series(100 + rng.random(10)).take(np.r_[0:4, 5:10]).replace(uniform=False).with_gaps()
    glob = make_series(100 + rng.random(10))
    pair = align_pair(local, glob)
    expected = sorted(set(local.timestamps[~local.gap].tolist()) & set(glob.timestamps.tolist()))
    assert pair.grid.tolist() == expected and len(pair) == 9


def test_align_errors():
    a = make_series(np.ones(5) * 100)
    b = make_series(np.ones(5) * 100, start=T0 + 100 * STEP)
    with pytest.raises(AlignmentError):
        align_pair(a, b)
    with pytest.raises(ConfigurationError):
        hourly = a.replace(grid_step=np.timedelta64(60, "m"), timestamps=T0 + np.arange(1, 6) * 2 * STEP)
        align_pair(a, hourly)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 40), st.integers(0, 40), st.integers(10, 60), st.integers(10, 60))
def test_align_pair_properties(off_a, off_b, n_a, n_b):
    a = make_series(np.linspace(100, 120, n_a), start=T0 + off_a * STEP)
    b = make_series(np.linspace(200, 220, n_b), start=T0 + off_b * STEP)
    common = set(a.timestamps.tolist()) & set(b.timestamps.tolist())
    if not common:
        with pytest.raises(AlignmentError):
            align_pair(a, b)
        return
    pair = align_pair(a, b)
    assert len(pair) == len(common)
    assert all(x.timestamp == y.timestamp for x, y in zip(pair.local, pair.global_))
    again = align_pair(pair.local, pair.global_)
    assert again == pair and again.dropped == {"local": 0, "global": 0}


def test_slice_weeks_paper_sample_has_109_windows():
    start = np.datetime64("2020-11-22T00:00", "ns")
    end = np.datetime64("2022-12-24T00:00", "ns")
    n = int((end - start) // STEP)
    pair = align_pair(*(make_series(np.full(n, 100.0), start=start),) * 2)
    weeks = slice_weeks(pair, "2020-11-22T00:00:00+00:00")
    assert len(weeks) == 109
    assert all(w.n_rows == BARS_PER_WEEK for w in weeks[:-1])


def test_single_full_week():
    pair = align_pair(*(make_series(np.full(336, 100.0)),) * 2)
    weeks = slice_weeks(pair, T0)
    assert len(weeks) == 1 and weeks[0].n_rows == 336 and not weeks[0].partial


def test_partial_trailing_week_flagged():
    pair = align_pair(*(make_series(np.full(340, 100.0)),) * 2)
    weeks = slice_weeks(pair, T0)
    # oracle: count rows per 7-day bucket of interval starts, by brute force
    week_of = [int((np.datetime64(t, "ns") - STEP - T0) // np.timedelta64(7, "D")) for t in pair.grid]
    brute = [week_of.count(w) for w in range(max(week_of) + 1)]
    assert [w.n_rows for w in weeks] == brute == [336, 4]
    assert weeks[1].partial and not weeks[1].usable


def test_bar_stamped_sunday_midnight_closes_the_previous_week():
    pair = align_pair(*(make_series(np.full(337, 100.0)),) * 2)
    weeks = slice_weeks(pair, T0)
    assert weeks[0].rows.grid[-1] == T0 + np.timedelta64(7, "D")
    assert [w.n_rows for w in weeks] == [336, 1]


def test_slice_weeks_rejects_non_sunday_anchor():
    pair = align_pair(*(make_series(np.full(10, 100.0)),) * 2)
    with pytest.raises(ConfigurationError):
        slice_weeks(pair, T0 + np.timedelta64(1, "D"))
    with pytest.raises(ConfigurationError):
        slice_weeks(pair, T0 + STEP)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 1500), st.integers(0, 400))
def test_slice_weeks_partitions_rows(n, offset):
    pair = align_pair(*(make_series(np.full(n, 100.0), start=T0 + offset * STEP),) * 2)
    weeks = slice_weeks(pair, T0)
    rows = np.concatenate([w.rows.grid for w in weeks if w.rows is not None])
    assert np.array_equal(rows, pair.grid)
    starts = [to_datetime64(w.start) for w in weeks]
    assert all(b - a == np.timedelta64(7, "D") for a, b in zip(starts, starts[1:]))


def test_timestamp_helpers_round_trip():
    d = datetime(2021, 5, 2, 5, 30, tzinfo=timezone.utc)
    assert to_datetime(to_datetime64(d)) == d
    assert to_datetime64("2021-05-02T07:30:00+02:00") == to_datetime64(d)
